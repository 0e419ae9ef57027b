#include "crowdbp/em.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "crowdbp/rng.hpp"

namespace crowdbp {

namespace {

using Clock = std::chrono::steady_clock;

const WorkerPrior& require_prior(const EMConfig& config, const Observations& data)
{
    if (!config.prior) throw UsageError {std::string {to_string(config.algorithm)} + " needs a worker prior"};
    if (config.prior->num_classes() != data.num_classes()) throw UsageError {"prior K differs from dataset K"};
    return *config.prior;
}

void require_features(const Observations& data, const EMConfig& config)
{
    if (!data.has_features()) {
        throw DataError {std::string {to_string(config.algorithm)} + " needs task features"};
    }
    if (config.outer_rounds == 0) throw UsageError {"outer_rounds must be at least 1"};
}

Matrix uniform_rows(const Observations& data)
{
    return Matrix::Constant(static_cast<Eigen::Index>(data.num_tasks()), static_cast<Eigen::Index>(data.num_classes()),
                            1.0 / static_cast<double>(data.num_classes()));
}

ClassifierModel initial_model(const Observations& data, const EMConfig& config)
{
    return ClassifierModel::from_config(config.classifier, data.feature_dim(), data.num_classes(),
                                        derive_seed(config.seed, {1}));
}

ClassifierModel m_step(const ClassifierModel& model, const Observations& data, const Matrix& q, const EMConfig& config)
{
    return fit_weighted(model, data.features(), q, config.classifier.epochs, config.classifier.learning_rate,
                        config.classifier.backtracking);
}

double max_change(const Matrix& a, const Matrix& b)
{
    return a.size() == 0 ? 0.0 : (a - b).cwiseAbs().maxCoeff();
}

BPOptions seeded_bp_options(const EMConfig& config)
{
    BPOptions options = config.bp;
    options.seed = derive_seed(config.seed, {2});
    return options;
}

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// Shared CL / Trace loop; `lambda == 0` selects the closed-form M-step.
RunResult run_point_estimate(const Observations& data, const EMConfig& config, double lambda)
{
    const auto start = Clock::now();
    require_features(data, config);
    if (!(lambda >= 0.0)) throw UsageError {"trace lambda must be nonnegative"};
    if (!(config.trace_init > 0.0)) throw UsageError {"trace init delta must be positive"};

    const Matrix& x = data.features();
    const double theta_lr = config.trace_learning_rate > 0.0 ? config.trace_learning_rate : config.classifier.learning_rate;
    ClassifierModel model = initial_model(data, config);
    std::vector<Matrix> thetas = diagonal_confusion_init(data.num_workers(), data.num_classes(), config.trace_init);
    std::vector<Matrix> logits(thetas.size());
    for (Index u = 0; u < thetas.size(); ++u) logits[u] = thetas[u].array().log().matrix();

    RunResult result;
    std::optional<Matrix> previous;
    for (Index round = 0; round < config.outer_rounds; ++round) {
        const Matrix f = clip_probs(model.predict_proba(x), config.clip);
        Matrix q = point_estimate_e_step(data, f, thetas);
        const auto counts = soft_counts(data, q);
        thetas = lambda == 0.0 ? confusion_mle(counts)
                               : trace_m_step(counts, logits, lambda, config.trace_steps, theta_lr);
        model = m_step(model, data, q, config);
        const double delta = previous ? max_change(q, *previous) : std::numeric_limits<double>::infinity();
        result.convergence_trace.push_back(delta);
        result.rounds = round + 1;
        previous = std::move(q);
        if (delta < config.outer_tolerance) break;
    }
    result.q = LabelPosterior {std::move(*previous)};
    result.model = std::move(model);
    result.worker_params = std::move(thetas);
    result.wall_seconds = seconds_since(start);
    return result;
}

} // namespace

Algorithm parse_algorithm(std::string_view text)
{
    if (text == "mv") return Algorithm::MV;
    if (text == "mf") return Algorithm::MF;
    if (text == "bp") return Algorithm::BP;
    if (text == "deepmf") return Algorithm::DeepMF;
    if (text == "deepbp") return Algorithm::DeepBP;
    if (text == "cl") return Algorithm::CL;
    if (text == "trace") return Algorithm::Trace;
    throw UsageError {"unknown algorithm '" + std::string {text} + "'"};
}

const char* to_string(Algorithm algorithm)
{
    switch (algorithm) {
    case Algorithm::MV: return "mv";
    case Algorithm::MF: return "mf";
    case Algorithm::BP: return "bp";
    case Algorithm::DeepMF: return "deepmf";
    case Algorithm::DeepBP: return "deepbp";
    case Algorithm::CL: return "cl";
    case Algorithm::Trace: return "trace";
    }
    return "?";
}

bool uses_features(Algorithm algorithm)
{
    switch (algorithm) {
    case Algorithm::DeepMF:
    case Algorithm::DeepBP:
    case Algorithm::CL:
    case Algorithm::Trace: return true;
    default: return false;
    }
}

LabelPosterior run_mv(const Observations& data)
{
    Matrix q = Matrix::Zero(static_cast<Eigen::Index>(data.num_tasks()), static_cast<Eigen::Index>(data.num_classes()));
    for (const auto& a : data.answers()) q(a.task, a.label) += 1.0;
    for (Eigen::Index i = 0; i < q.rows(); ++i) {
        const double votes = q.row(i).sum();
        if (votes > 0.0) {
            q.row(i) /= votes;
        } else {
            q.row(i).setConstant(1.0 / static_cast<double>(q.cols()));
        }
    }
    return LabelPosterior {std::move(q)};
}

RunResult run_featureless(const Observations& data, const EMConfig& config)
{
    const auto start = Clock::now();
    RunResult result;
    switch (config.algorithm) {
    case Algorithm::MV:
        result.q = run_mv(data);
        result.rounds = 1;
        break;
    case Algorithm::MF: {
        MFState state = mf_infer(data, uniform_rows(data), require_prior(config, data), config.mf);
        result.q = std::move(state.q);
        result.worker_params = std::move(state.beta);
        result.convergence_trace = std::move(state.elbo_trace);
        result.rounds = state.iterations;
        break;
    }
    case Algorithm::BP: {
        BPResult bp = bp_run(data, uniform_rows(data), require_prior(config, data), seeded_bp_options(config));
        result.q = std::move(bp.q);
        result.convergence_trace.push_back(bp.messages.last_change);
        result.rounds = bp.messages.sweeps;
        break;
    }
    default: throw UsageError {std::string {to_string(config.algorithm)} + " is not a featureless algorithm"};
    }
    result.wall_seconds = seconds_since(start);
    return result;
}

RunResult run_deep_mf(const Observations& data, const EMConfig& config)
{
    const auto start = Clock::now();
    require_features(data, config);
    const WorkerPrior& prior = require_prior(config, data);
    const Matrix& x = data.features();
    ClassifierModel model = initial_model(data, config);

    RunResult result;
    MFState state;
    std::optional<Matrix> previous;
    for (Index round = 0; round < config.outer_rounds; ++round) {
        const Matrix f = clip_probs(model.predict_proba(x), config.clip);
        state = mf_infer(data, f, prior, config.mf, previous);
        model = m_step(model, data, state.q.matrix(), config);
        const double delta = previous ? max_change(state.q.matrix(), *previous)
                                      : std::numeric_limits<double>::infinity();
        result.convergence_trace.push_back(delta);
        result.rounds = round + 1;
        previous = state.q.matrix();
        if (delta < config.outer_tolerance) break;
    }
    result.q = std::move(state.q);
    result.model = std::move(model);
    result.worker_params = std::move(state.beta);
    result.wall_seconds = seconds_since(start);
    return result;
}

RunResult run_deep_bp(const Observations& data, const EMConfig& config)
{
    const auto start = Clock::now();
    require_features(data, config);
    const WorkerPrior& prior = require_prior(config, data);
    const Matrix& x = data.features();
    const BPOptions options = seeded_bp_options(config);
    ClassifierModel model = initial_model(data, config);

    RunResult result;
    std::optional<MessageState> messages;
    std::optional<Matrix> previous;
    LabelPosterior q;
    for (Index round = 0; round < config.outer_rounds; ++round) {
        const Matrix f = clip_probs(model.predict_proba(x), config.clip);
        BPResult bp = bp_run(data, f, prior, options, config.bp_cold_start ? std::nullopt : std::move(messages));
        messages = std::move(bp.messages);
        q = std::move(bp.q);
        model = m_step(model, data, q.matrix(), config);
        const double delta = previous ? max_change(q.matrix(), *previous) : std::numeric_limits<double>::infinity();
        result.convergence_trace.push_back(delta);
        result.rounds = round + 1;
        previous = q.matrix();
        if (delta < config.outer_tolerance) break;
    }
    result.q = std::move(q);
    result.model = std::move(model);
    result.wall_seconds = seconds_since(start);
    return result;
}

RunResult run_cl(const Observations& data, const EMConfig& config)
{
    return run_point_estimate(data, config, 0.0);
}

RunResult run_trace(const Observations& data, const EMConfig& config)
{
    if (config.trace_lambda < 0.0) throw UsageError {"trace lambda must be nonnegative"};
    return run_point_estimate(data, config, config.trace_lambda);
}

RunResult run_algorithm(const Observations& data, const EMConfig& config)
{
    switch (config.algorithm) {
    case Algorithm::MV:
    case Algorithm::MF:
    case Algorithm::BP: return run_featureless(data, config);
    case Algorithm::DeepMF: return run_deep_mf(data, config);
    case Algorithm::DeepBP: return run_deep_bp(data, config);
    case Algorithm::CL: return run_cl(data, config);
    case Algorithm::Trace: return run_trace(data, config);
    }
    throw UsageError {"unknown algorithm"};
}

std::vector<Matrix> diagonal_confusion_init(Index num_workers, Index num_classes, double delta)
{
    const auto k = static_cast<Eigen::Index>(num_classes);
    const double on = std::exp(delta);
    Matrix theta = Matrix::Constant(k, k, 1.0 / (on + static_cast<double>(k - 1)));
    theta.diagonal().setConstant(on / (on + static_cast<double>(k - 1)));
    return std::vector<Matrix>(num_workers, theta);
}

Matrix point_estimate_e_step(const Observations& data, const Matrix& f_values, const std::vector<Matrix>& thetas)
{
    if (thetas.size() != data.num_workers()) throw UsageError {"need one confusion matrix per worker"};
    Matrix q = f_values.array().log().matrix();
    for (Index i = 0; i < data.num_tasks(); ++i) {
        auto row = q.row(static_cast<Eigen::Index>(i));
        for (Index e : data.graph().task_edges(i)) {
            const auto& a = data.answer(e);
            row += thetas[a.worker].col(a.label).array().log().matrix().transpose();
        }
        const double top = row.maxCoeff();
        if (!std::isfinite(top)) throw NumericalError {"E-step row " + std::to_string(i) + " has no support"};
        row = (row.array() - top).exp().matrix();
        row /= row.sum();
    }
    return q;
}

std::vector<Matrix> soft_counts(const Observations& data, const Matrix& q)
{
    const auto k = static_cast<Eigen::Index>(data.num_classes());
    std::vector<Matrix> counts(data.num_workers(), Matrix::Zero(k, k));
    for (const auto& a : data.answers()) counts[a.worker].col(a.label) += q.row(static_cast<Eigen::Index>(a.task)).transpose();
    return counts;
}

std::vector<Matrix> confusion_mle(const std::vector<Matrix>& counts, double floor)
{
    std::vector<Matrix> thetas;
    thetas.reserve(counts.size());
    for (const auto& n : counts) {
        Matrix theta = n.array() + floor;
        for (Eigen::Index r = 0; r < theta.rows(); ++r) theta.row(r) /= theta.row(r).sum();
        thetas.push_back(std::move(theta));
    }
    return thetas;
}

std::vector<Matrix> trace_m_step(const std::vector<Matrix>& counts, std::vector<Matrix>& logits, double lambda,
                                 Index steps, double learning_rate)
{
    if (counts.size() != logits.size()) throw UsageError {"counts and logits differ in length"};
    std::vector<Matrix> thetas(counts.size());
    for (Index u = 0; u < counts.size(); ++u) {
        Matrix& l = logits[u];
        const Matrix& n = counts[u];
        Matrix theta(l.rows(), l.cols());
        const auto refresh = [&] {
            for (Eigen::Index r = 0; r < l.rows(); ++r) {
                const double top = l.row(r).maxCoeff();
                theta.row(r) = (l.row(r).array() - top).exp().matrix();
                theta.row(r) /= theta.row(r).sum();
            }
        };
        refresh();
        for (Index s = 0; s < steps; ++s) {
            for (Eigen::Index r = 0; r < l.rows(); ++r) {
                const double row_total = n.row(r).sum();
                for (Eigen::Index c = 0; c < l.cols(); ++c) {
                    double grad = n(r, c) - row_total * theta(r, c);
                    grad -= lambda * ((r == c ? 1.0 : 0.0) - theta(r, c));
                    l(r, c) += learning_rate * grad;
                }
            }
            refresh();
        }
        thetas[u] = std::move(theta);
    }
    return thetas;
}

} // namespace crowdbp
