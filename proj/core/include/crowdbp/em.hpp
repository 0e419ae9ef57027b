#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "crowdbp/classifier.hpp"
#include "crowdbp/dataset.hpp"
#include "crowdbp/factor_bp.hpp"
#include "crowdbp/meanfield.hpp"
#include "crowdbp/priors.hpp"

namespace crowdbp {

enum class Algorithm { MV, MF, BP, DeepMF, DeepBP, CL, Trace };

Algorithm parse_algorithm(std::string_view text);
const char* to_string(Algorithm algorithm);
bool uses_features(Algorithm algorithm);

struct EMConfig
{
    Algorithm algorithm = Algorithm::DeepBP;
    /// Required by mf, bp, deepmf and deepbp.
    std::optional<WorkerPrior> prior;
    double clip = 0.9;
    Index outer_rounds = 50;
    double outer_tolerance = 1e-4;
    MFOptions mf;
    BPOptions bp;
    /// Restart BP messages from uniform at every outer round instead of
    /// continuing from the previous round.
    bool bp_cold_start = false;
    ClassifierConfig classifier;
    double trace_lambda = 0.0;
    double trace_init = 2.0;
    Index trace_steps = 20;
    /// Step size of the Trace confusion-matrix update; 0 means "use the classifier learning rate".
    double trace_learning_rate = 0.0;
    std::uint64_t seed = 0;
};

struct RunResult
{
    LabelPosterior q;
    std::optional<ClassifierModel> model;
    /// Dirichlet parameters beta (MF family) or point confusion matrices (CL/Trace).
    std::vector<Matrix> worker_params;
    /// Largest posterior change of each outer round (inner sweeps for featureless runs).
    std::vector<double> convergence_trace;
    Index rounds = 0;
    double wall_seconds = 0.0;
};

LabelPosterior run_mv(const Observations& data);

RunResult run_featureless(const Observations& data, const EMConfig& config);
RunResult run_deep_mf(const Observations& data, const EMConfig& config);
RunResult run_deep_bp(const Observations& data, const EMConfig& config);
RunResult run_cl(const Observations& data, const EMConfig& config);
RunResult run_trace(const Observations& data, const EMConfig& config);

/// Dispatches on config.algorithm.
RunResult run_algorithm(const Observations& data, const EMConfig& config);

// Building blocks of CL/Trace, exposed for tests.

/// Confusion matrices whose rows are softmax(delta * e_k).
std::vector<Matrix> diagonal_confusion_init(Index num_workers, Index num_classes, double delta);

/// q_i(z) proportional to f_i(z) * prod_u theta^(u)_{z, y_i^(u)}.
Matrix point_estimate_e_step(const Observations& data, const Matrix& f_values, const std::vector<Matrix>& thetas);

/// Soft counts n^(u)_{k1 k2} = sum over answers k2 of u of q_i(k1).
std::vector<Matrix> soft_counts(const Observations& data, const Matrix& q);

/// Maximizer of sum n log theta per row, after adding `floor` to every count.
std::vector<Matrix> confusion_mle(const std::vector<Matrix>& counts, double floor = 1e-6);

/// `steps` gradient-ascent steps on sum n log theta - lambda * sum_k log theta_kk
/// over the softmax logits of each row. Logits are updated in place.
std::vector<Matrix> trace_m_step(const std::vector<Matrix>& counts, std::vector<Matrix>& logits, double lambda,
                                 Index steps, double learning_rate);

} // namespace crowdbp
