#pragma once

#include <span>

#include "crowdbp/dataset.hpp"
#include "crowdbp/priors.hpp"

namespace crowdbp::oracle {

struct OracleLimits
{
    Index max_tasks = 12;
    Index max_states = 1'000'000;  // cap on K^N
    Index max_degree = 12;         // cap for the moment expansion
};

/// Exact marginals p(z_i | x, y) by summing f-weighted worker marginal
/// likelihoods over every joint labeling z in [K]^N.
LabelPosterior enumerate_posterior(const Observations& data, const Matrix& f_values, const WorkerPrior& prior,
                                   const OracleLimits& limits = {});

/// E_theta[theta_{z, y_t} * prod_{j != t} <theta_{., y_j}, m_j>] computed by
/// expanding the product of linear forms into monomials (merged by their
/// count matrix) and integrating each monomial with closed-form Dirichlet /
/// Beta moments. Incoming rows are normalized first; the row at `target` is
/// ignored.
double moment_factor_oracle(const WorkerPrior& prior, std::span<const Label> answers, const Matrix& incoming,
                            Index target, Label target_label, const OracleLimits& limits = {});

/// moment_factor_oracle for every target label, normalized to sum to one.
Eigen::RowVectorXd moment_factor_message(const WorkerPrior& prior, std::span<const Label> answers,
                                         const Matrix& incoming, Index target, const OracleLimits& limits = {});

} // namespace crowdbp::oracle
