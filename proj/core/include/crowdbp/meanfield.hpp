#pragma once

#include <optional>
#include <vector>

#include "crowdbp/dataset.hpp"
#include "crowdbp/priors.hpp"

namespace crowdbp {

/// Fully factorized variational state: q(z_i) per task, Dir(beta^(u)) per worker.
struct MFState
{
    LabelPosterior q;
    std::vector<Matrix> beta;
    std::vector<double> elbo_trace;
    Index iterations = 0;
    bool converged = false;
};

struct MFOptions
{
    double tolerance = 1e-6;
    Index max_iterations = 100;
};

/// q_i(z) proportional to 1 + (votes for z on task i).
Matrix smoothed_majority_vote(const Observations& data);

/// beta^(u) = alpha + soft counts: beta_{k1 k2} += q_i(k1) for each answer k2 of u.
/// Coin priors contribute their per-row Dirichlet expansion as alpha.
std::vector<Matrix> mf_update_beta(const Matrix& q, const Observations& data, const WorkerPrior& prior);

/// log q_i(z) = log f_i(z) + sum_u E[log theta^(u)_{z, y_i^(u)}] + const.
Matrix mf_update_q(const Observations& data, const Matrix& f_values, const std::vector<Matrix>& beta);

/// Evidence lower bound: expected answer log-likelihood minus KL(q || f)
/// minus the Dirichlet KL of every worker row.
double mf_elbo(const Matrix& q, const std::vector<Matrix>& beta, const Observations& data,
               const Matrix& f_values, const WorkerPrior& prior);

/// Coordinate ascent from `initial_q` (smoothed majority vote when absent)
/// until the largest change of any q entry drops below the tolerance.
MFState mf_infer(const Observations& data, const Matrix& f_values, const WorkerPrior& prior,
                 const MFOptions& options = {}, const std::optional<Matrix>& initial_q = std::nullopt);

} // namespace crowdbp
