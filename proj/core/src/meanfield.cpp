#include "crowdbp/meanfield.hpp"

#include <cmath>
#include <limits>

namespace crowdbp {

namespace {

void check_shapes(const Observations& data, const Matrix& rows, const char* what)
{
    if (static_cast<Index>(rows.rows()) != data.num_tasks() || static_cast<Index>(rows.cols()) != data.num_classes()) {
        throw UsageError {std::string {what} + " must be N x K"};
    }
}

// Normalizes a row of log-weights in place into probabilities.
void softmax_row(Eigen::Ref<Eigen::RowVectorXd> row)
{
    const double top = row.maxCoeff();
    if (!std::isfinite(top)) throw NumericalError {"posterior row has no finite log-weight"};
    double total = 0.0;
    for (Eigen::Index k = 0; k < row.size(); ++k) {
        row(k) = std::exp(row(k) - top);
        total += row(k);
    }
    row /= total;
}

} // namespace

Matrix smoothed_majority_vote(const Observations& data)
{
    Matrix q = Matrix::Ones(static_cast<Eigen::Index>(data.num_tasks()), static_cast<Eigen::Index>(data.num_classes()));
    for (const auto& a : data.answers()) q(a.task, a.label) += 1.0;
    for (Eigen::Index i = 0; i < q.rows(); ++i) q.row(i) /= q.row(i).sum();
    return q;
}

std::vector<Matrix> mf_update_beta(const Matrix& q, const Observations& data, const WorkerPrior& prior)
{
    check_shapes(data, q, "q");
    if (prior.num_classes() != data.num_classes()) throw UsageError {"prior K differs from dataset K"};
    std::vector<Matrix> beta(data.num_workers(), prior.dirichlet_rows());
    for (Index u = 0; u < data.num_workers(); ++u) {
        for (Index e : data.graph().worker_edges(u)) {
            const auto& a = data.answer(e);
            beta[u].col(a.label) += q.row(a.task).transpose();
        }
    }
    return beta;
}

Matrix mf_update_q(const Observations& data, const Matrix& f_values, const std::vector<Matrix>& beta)
{
    check_shapes(data, f_values, "f");
    if (beta.size() != data.num_workers()) throw UsageError {"need one beta matrix per worker"};
    std::vector<Matrix> elog(beta.size());
    for (Index u = 0; u < beta.size(); ++u) elog[u] = expected_log_theta(beta[u]);

    Matrix q = f_values.array().log().matrix();
    for (Index i = 0; i < data.num_tasks(); ++i) {
        for (Index e : data.graph().task_edges(i)) {
            const auto& a = data.answer(e);
            q.row(i) += elog[a.worker].col(a.label).transpose();
        }
        softmax_row(q.row(i));
    }
    return q;
}

double mf_elbo(const Matrix& q, const std::vector<Matrix>& beta, const Observations& data,
               const Matrix& f_values, const WorkerPrior& prior)
{
    check_shapes(data, q, "q");
    check_shapes(data, f_values, "f");
    const Index k = data.num_classes();

    double expected_loglik = 0.0;
    std::vector<Matrix> elog(beta.size());
    for (Index u = 0; u < beta.size(); ++u) elog[u] = expected_log_theta(beta[u]);
    for (const auto& a : data.answers()) {
        for (Index z = 0; z < k; ++z) expected_loglik += q(a.task, z) * elog[a.worker](z, a.label);
    }

    double kl_labels = 0.0;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        for (Index z = 0; z < k; ++z) {
            const double p = q(i, z);
            if (p > 0.0) kl_labels += p * (std::log(p) - std::log(f_values(i, z)));
        }
    }

    double kl_workers = 0.0;
    const Matrix& alpha = prior.dirichlet_rows();
    for (const auto& b : beta) {
        for (Eigen::Index r = 0; r < b.rows(); ++r) {
            kl_workers += kl_dirichlet({b.data() + r * b.cols(), k}, {alpha.data() + r * alpha.cols(), k});
        }
    }
    return expected_loglik - kl_labels - kl_workers;
}

MFState mf_infer(const Observations& data, const Matrix& f_values, const WorkerPrior& prior,
                 const MFOptions& options, const std::optional<Matrix>& initial_q)
{
    check_shapes(data, f_values, "f");
    Matrix q = initial_q ? *initial_q : smoothed_majority_vote(data);
    check_shapes(data, q, "initial q");

    MFState state;
    state.beta = mf_update_beta(q, data, prior);
    for (Index it = 0; it < options.max_iterations; ++it) {
        Matrix next = mf_update_q(data, f_values, state.beta);
        const double change = next.size() == 0 ? 0.0 : (next - q).cwiseAbs().maxCoeff();
        q = std::move(next);
        state.beta = mf_update_beta(q, data, prior);
        state.elbo_trace.push_back(mf_elbo(q, state.beta, data, f_values, prior));
        state.iterations = it + 1;
        if (change < options.tolerance) {
            state.converged = true;
            break;
        }
    }
    state.q = LabelPosterior {std::move(q)};
    return state;
}

} // namespace crowdbp
