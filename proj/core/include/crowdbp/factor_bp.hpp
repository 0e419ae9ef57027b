#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "crowdbp/dataset.hpp"
#include "crowdbp/priors.hpp"

namespace crowdbp {

enum class FactorMode { Auto, ExactEnum, OneCoinDP, MonteCarlo };

FactorMode parse_factor_mode(std::string_view text);
const char* to_string(FactorMode mode);

struct FactorEvalConfig
{
    FactorMode mode = FactorMode::Auto;
    Index samples = 400;
    Index exact_degree_cap = 10;
    /// m <- (1 - damping) * m_new + damping * m_old on worker-to-task messages.
    double damping = 0.0;
};

/// Messages live on edges; edge ids follow the answer order of the dataset.
struct MessageState
{
    Matrix task_to_worker;  // E x K
    Matrix worker_to_task;  // E x K
    Matrix feature;         // N x K, the (clipped) classifier rows
    Index sweeps = 0;
    double last_change = 0.0;
    bool converged = false;

    static MessageState initial(const Observations& data, const Matrix& feature_rows);
};

/*
 * Factor-to-variable messages for a single worker factor g_u.
 *
 * `answers` holds y_j for every task j the worker labelled and `incoming`
 * holds the matching task-to-worker messages (one row per neighbor). The
 * row at `target` is ignored; the returned K-vector is normalized.
 */

/// Brute-force sum over the K^(n-1) labelings of the other neighbors.
Eigen::RowVectorXd factor_message_exact(const WorkerPrior& prior, std::span<const Label> answers,
                                        const Matrix& incoming, Index target, Index degree_cap = 10);

/// Exact message for a one-coin prior: a Poisson-binomial DP over the number
/// of other neighbors whose latent label matches the worker's answer.
Eigen::RowVectorXd factor_message_onecoin_dp(const WorkerPrior& prior, std::span<const Label> answers,
                                             const Matrix& incoming, Index target);

/// Monte-Carlo estimate of E_theta[theta_{z,y_t} prod_{j != t} <theta_{., y_j}, m_j>] from S prior draws.
Eigen::RowVectorXd factor_message_mc(const WorkerPrior& prior, std::span<const Label> answers,
                                     const Matrix& incoming, Index target, Index samples, std::uint64_t seed);

// All-target variants: row t of the result is the message to neighbor t.
Matrix factor_messages_exact(const WorkerPrior& prior, std::span<const Label> answers, const Matrix& incoming,
                             Index degree_cap = 10);
Matrix factor_messages_onecoin_dp(const WorkerPrior& prior, std::span<const Label> answers, const Matrix& incoming);
Matrix factor_messages_mc(const WorkerPrior& prior, std::span<const Label> answers, const Matrix& incoming,
                          Index samples, std::uint64_t seed);

/// Evaluator chosen for a worker of the given degree under `config`.
FactorMode resolve_factor_mode(const FactorEvalConfig& config, const WorkerPrior& prior, Index degree);

struct BPOptions
{
    FactorEvalConfig factor;
    Index max_sweeps = 50;
    double tolerance = 1e-6;
    std::uint64_t seed = 0;
};

struct BPResult
{
    LabelPosterior q;
    MessageState messages;
};

/// Synchronous sum-product on the task/worker factor graph. Pass a previous
/// MessageState to warm start; its feature rows are replaced by `f_values`.
BPResult bp_run(const Observations& data, const Matrix& f_values, const WorkerPrior& prior,
                const BPOptions& options = {}, std::optional<MessageState> warm_start = std::nullopt);

/// q_i proportional to feature_i * prod_u worker_to_task messages.
LabelPosterior bp_beliefs(const Observations& data, const MessageState& messages);

} // namespace crowdbp
