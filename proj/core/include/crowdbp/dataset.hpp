#pragma once

#include <optional>
#include <span>
#include <vector>

#include "crowdbp/common.hpp"

namespace crowdbp {

struct Answer
{
    Index task;
    Index worker;
    Label label;

    friend bool operator==(const Answer&, const Answer&) = default;
};

/// Bipartite task/worker adjacency in CSR form. Edge ids index the answer list
/// the graph was built from.
class AssignmentGraph
{
public:
    AssignmentGraph() = default;
    AssignmentGraph(Index num_tasks, Index num_workers, std::span<const Answer> answers);

    Index num_tasks() const noexcept { return task_offsets_.empty() ? 0 : task_offsets_.size() - 1; }
    Index num_workers() const noexcept { return worker_offsets_.empty() ? 0 : worker_offsets_.size() - 1; }
    Index num_edges() const noexcept { return task_edges_.size(); }

    /// Edge ids of the workers that answered task i, in answer order.
    std::span<const Index> task_edges(Index task) const;
    /// Edge ids of the tasks answered by worker u, in answer order.
    std::span<const Index> worker_edges(Index worker) const;

    Index task_degree(Index task) const { return task_edges(task).size(); }
    Index worker_degree(Index worker) const { return worker_edges(worker).size(); }

private:
    std::vector<Index> task_offsets_;
    std::vector<Index> task_edges_;
    std::vector<Index> worker_offsets_;
    std::vector<Index> worker_edges_;
};

/// Everything an inference engine is allowed to see: answers and optional
/// task features. Ground truth lives one level up, in CrowdDataset.
class Observations
{
public:
    Observations() = default;

    /// Validates ranges and rejects duplicate (task, worker) pairs.
    Observations(Index num_tasks, Index num_workers, Index num_classes,
                 std::vector<Answer> answers, std::optional<Matrix> features = std::nullopt);

    Index num_tasks() const noexcept { return num_tasks_; }
    Index num_workers() const noexcept { return num_workers_; }
    Index num_classes() const noexcept { return num_classes_; }
    Index num_answers() const noexcept { return answers_.size(); }

    const std::vector<Answer>& answers() const noexcept { return answers_; }
    const Answer& answer(Index edge) const { return answers_[edge]; }
    const AssignmentGraph& graph() const noexcept { return graph_; }

    bool has_features() const noexcept { return features_.has_value(); }
    const Matrix& features() const;
    Index feature_dim() const noexcept { return features_ ? static_cast<Index>(features_->cols()) : 0; }

private:
    Index num_tasks_ = 0;
    Index num_workers_ = 0;
    Index num_classes_ = 0;
    std::vector<Answer> answers_;
    std::optional<Matrix> features_;
    AssignmentGraph graph_;
};

struct CrowdDataset
{
    Observations observations;
    std::optional<std::vector<Label>> truth;

    Index num_tasks() const noexcept { return observations.num_tasks(); }
    Index num_classes() const noexcept { return observations.num_classes(); }
};

/// Per-task categorical distributions; rows lie on the simplex.
class LabelPosterior
{
public:
    LabelPosterior() = default;
    explicit LabelPosterior(Matrix q);

    static LabelPosterior uniform(Index num_tasks, Index num_classes);

    Index num_tasks() const noexcept { return static_cast<Index>(q_.rows()); }
    Index num_classes() const noexcept { return static_cast<Index>(q_.cols()); }
    const Matrix& matrix() const noexcept { return q_; }
    double operator()(Index task, Index label) const { return q_(task, label); }

    friend bool operator==(const LabelPosterior& a, const LabelPosterior& b)
    {
        return a.q_.rows() == b.q_.rows() && a.q_.cols() == b.q_.cols() && a.q_ == b.q_;
    }

private:
    Matrix q_;
};

struct MetricsReport
{
    double denoised_accuracy = 0.0;
    std::optional<double> test_accuracy;
    std::vector<double> per_seed_denoised;
    std::vector<double> per_seed_test;
    std::vector<std::size_t> marginal_histogram;     // 10 bins of q(z = 0)
    std::vector<double> sorted_worst_accuracies;     // ascending
};

/// Per-task argmax; ties go to the lowest class index.
std::vector<Label> argmax_labels(const Matrix& rows);
std::vector<Label> argmax_labels(const LabelPosterior& q);

double accuracy(std::span<const Label> predicted, std::span<const Label> truth);

/// Fraction of tasks whose argmax label equals the truth.
double denoised_accuracy(const LabelPosterior& q, const std::optional<std::vector<Label>>& truth);

/// Largest absolute entrywise difference between two posteriors of equal shape.
double max_abs_difference(const Matrix& a, const Matrix& b);

} // namespace crowdbp
