#include "crowdbp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace crowdbp {

namespace {

void build_csr(Index num_nodes, std::span<const Answer> answers, bool by_task,
               std::vector<Index>& offsets, std::vector<Index>& edges)
{
    offsets.assign(num_nodes + 1, 0);
    for (const auto& a : answers) ++offsets[(by_task ? a.task : a.worker) + 1];
    for (Index n = 0; n < num_nodes; ++n) offsets[n + 1] += offsets[n];
    edges.assign(answers.size(), 0);
    std::vector<Index> cursor(offsets.begin(), offsets.end() - 1);
    for (Index e = 0; e < answers.size(); ++e) {
        const Index node = by_task ? answers[e].task : answers[e].worker;
        edges[cursor[node]++] = e;
    }
}

} // namespace

AssignmentGraph::AssignmentGraph(Index num_tasks, Index num_workers, std::span<const Answer> answers)
{
    build_csr(num_tasks, answers, true, task_offsets_, task_edges_);
    build_csr(num_workers, answers, false, worker_offsets_, worker_edges_);
}

std::span<const Index> AssignmentGraph::task_edges(Index task) const
{
    return {task_edges_.data() + task_offsets_[task], task_offsets_[task + 1] - task_offsets_[task]};
}

std::span<const Index> AssignmentGraph::worker_edges(Index worker) const
{
    return {worker_edges_.data() + worker_offsets_[worker],
            worker_offsets_[worker + 1] - worker_offsets_[worker]};
}

Observations::Observations(Index num_tasks, Index num_workers, Index num_classes,
                           std::vector<Answer> answers, std::optional<Matrix> features)
: num_tasks_ {num_tasks}
, num_workers_ {num_workers}
, num_classes_ {num_classes}
, answers_ {std::move(answers)}
, features_ {std::move(features)}
{
    if (num_classes_ < 2) throw DataError {"need at least two classes"};
    std::unordered_map<std::uint64_t, Index> seen;
    seen.reserve(answers_.size());
    for (Index e = 0; e < answers_.size(); ++e) {
        const auto& a = answers_[e];
        if (a.task >= num_tasks_ || a.worker >= num_workers_ || a.label >= num_classes_) {
            std::ostringstream msg;
            msg << "answer " << e << " (task " << a.task << ", worker " << a.worker << ", label "
                << a.label << ") is out of range for N=" << num_tasks_ << " M=" << num_workers_
                << " K=" << num_classes_;
            throw DataError {msg.str()};
        }
        const auto key = static_cast<std::uint64_t>(a.task) * (num_workers_ + 1) + a.worker;
        if (auto [it, inserted] = seen.emplace(key, e); !inserted) {
            std::ostringstream msg;
            msg << "answers " << it->second << " and " << e << " repeat the pair (task " << a.task
                << ", worker " << a.worker << ")";
            throw DataError {msg.str()};
        }
    }
    if (features_ && static_cast<Index>(features_->rows()) != num_tasks_) {
        throw DataError {"feature matrix has " + std::to_string(features_->rows()) + " rows, expected " +
                         std::to_string(num_tasks_)};
    }
    graph_ = AssignmentGraph {num_tasks_, num_workers_, answers_};
}

const Matrix& Observations::features() const
{
    if (!features_) throw UsageError {"dataset has no features"};
    return *features_;
}

LabelPosterior::LabelPosterior(Matrix q) : q_ {std::move(q)}
{
    for (Eigen::Index i = 0; i < q_.rows(); ++i) {
        double sum = 0.0;
        for (Eigen::Index k = 0; k < q_.cols(); ++k) {
            const double v = q_(i, k);
            if (!(v >= 0.0 && v <= 1.0 + 1e-12)) {
                throw NumericalError {"posterior row " + std::to_string(i) + " has entry outside [0,1]"};
            }
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9) {
            throw NumericalError {"posterior row " + std::to_string(i) + " does not sum to one"};
        }
    }
}

LabelPosterior LabelPosterior::uniform(Index num_tasks, Index num_classes)
{
    return LabelPosterior {Matrix::Constant(static_cast<Eigen::Index>(num_tasks),
                                            static_cast<Eigen::Index>(num_classes), 1.0 / static_cast<double>(num_classes))};
}

std::vector<Label> argmax_labels(const Matrix& rows)
{
    std::vector<Label> result(static_cast<Index>(rows.rows()));
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < rows.cols(); ++k) {
            if (rows(i, k) > rows(i, best)) best = k;
        }
        result[static_cast<Index>(i)] = static_cast<Label>(best);
    }
    return result;
}

std::vector<Label> argmax_labels(const LabelPosterior& q)
{
    return argmax_labels(q.matrix());
}

double accuracy(std::span<const Label> predicted, std::span<const Label> truth)
{
    if (predicted.size() != truth.size()) throw UsageError {"label vectors differ in length"};
    if (truth.empty()) return 0.0;
    std::size_t hits = 0;
    for (Index i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double denoised_accuracy(const LabelPosterior& q, const std::optional<std::vector<Label>>& truth)
{
    if (!truth) throw UsageError {"denoised accuracy requires ground truth"};
    if (truth->size() != q.num_tasks()) throw UsageError {"truth length does not match posterior"};
    return accuracy(argmax_labels(q), *truth);
}

double max_abs_difference(const Matrix& a, const Matrix& b)
{
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw UsageError {"shape mismatch"};
    if (a.size() == 0) return 0.0;
    return (a - b).cwiseAbs().maxCoeff();
}

} // namespace crowdbp
