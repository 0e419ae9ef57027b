#include "crowdbp/factor_bp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "crowdbp/rng.hpp"

namespace crowdbp {

namespace {

constexpr double message_floor = 1e-300;

void check_neighborhood(const WorkerPrior& prior, std::span<const Label> answers, const Matrix& incoming)
{
    if (answers.empty()) throw UsageError {"worker factor has no neighbors"};
    if (static_cast<Index>(incoming.rows()) != answers.size() ||
        static_cast<Index>(incoming.cols()) != prior.num_classes()) {
        throw UsageError {"incoming messages must be (degree x K)"};
    }
    for (Label y : answers) {
        if (y >= prior.num_classes()) throw UsageError {"answer label out of range"};
    }
}

// Floors, then normalizes a nonnegative row.
void normalize_row(Eigen::Ref<Eigen::RowVectorXd> row)
{
    for (Eigen::Index k = 0; k < row.size(); ++k) row(k) = std::max(row(k), message_floor);
    row /= row.sum();
}

// Normalizes a row of log-weights.
void normalize_log_row(Eigen::Ref<Eigen::RowVectorXd> row)
{
    const double top = row.maxCoeff();
    for (Eigen::Index k = 0; k < row.size(); ++k) row(k) = std::exp(row(k) - top);
    normalize_row(row);
}

// Extended-range reals for the one-coin DP. Near-chance neighbors make the
// Poisson-binomial mass and the count weights both span hundreds of orders of
// magnitude in opposite directions, so their product must be formed without
// underflow: x86-64 long double reaches about e^11356, enough for degrees in
// the low thousands.
using Wide = long double;

// Poisson-binomial distribution of the number of successes among `probs`.
std::vector<Wide> poisson_binomial(std::span<const double> probs)
{
    std::vector<Wide> dist(probs.size() + 1, 0.0L);
    dist[0] = 1.0L;
    for (std::size_t j = 0; j < probs.size(); ++j) {
        const Wide p = probs[j];
        for (std::size_t c = j + 1; c > 0; --c) dist[c] = dist[c] * (1.0L - p) + dist[c - 1] * p;
        dist[0] *= 1.0L - p;
    }
    return dist;
}

// Weight of a one-coin factor over `degree` neighbors when `c` of them are
// correct:
//   weight[c] = E[p^c (1-p)^(degree-c)] (K-1)^-(degree-c),  c = 0..degree,
// shifted by the largest log weight (the common factor cancels on
// normalization). With the target summed in last, the target answered
// correctly contributes weight[c + 1] and wrongly weight[c], where c counts
// the correct others.
std::vector<Wide> onecoin_weights(const WorkerPrior& prior, Index degree)
{
    const double a1 = prior.correct_concentration();
    const double a2 = prior.wrong_concentration();
    const double log_spread = std::log(static_cast<double>(prior.num_classes() - 1));
    std::vector<double> log_weight(degree + 1);
    for (Index c = 0; c <= degree; ++c) {
        const double w = static_cast<double>(degree - c);
        log_weight[c] = log_beta(a1 + static_cast<double>(c), a2 + w) - w * log_spread;
    }
    const double top = *std::max_element(log_weight.begin(), log_weight.end());
    std::vector<Wide> weight(degree + 1);
    for (Index c = 0; c <= degree; ++c) weight[c] = std::exp(static_cast<Wide>(log_weight[c] - top));
    return weight;
}

std::vector<double> correct_probabilities(std::span<const Label> answers, const Matrix& incoming)
{
    std::vector<double> probs(answers.size());
    for (Index j = 0; j < answers.size(); ++j) {
        const double total = incoming.row(static_cast<Eigen::Index>(j)).sum();
        probs[j] = std::clamp(incoming(static_cast<Eigen::Index>(j), answers[j]) / total, 0.0, 1.0);
    }
    return probs;
}

Eigen::RowVectorXd onecoin_message(Index num_classes, Label answer, Wide hit, Wide miss)
{
    const Wide scale = std::max(hit, miss);
    if (!(scale > 0.0L) || !std::isfinite(scale)) {
        throw NumericalError {"one-coin message underflowed; worker degree too large for the DP"};
    }
    Eigen::RowVectorXd msg = Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(num_classes),
                                                          static_cast<double>(miss / scale));
    msg(answer) = static_cast<double>(hit / scale);
    normalize_row(msg);
    return msg;
}

// Leave-one-out evaluation of sum_c PB_{-t}[c] weight[c + s] for s = 0, 1 and
// every leaf t of a segment tree over the neighbors. A node covering `size`
// neighbors carries the functional c -> sum_b P_outside[b] weight[c + b] for
// c in [0, size], where P_outside is the Poisson-binomial distribution of the
// neighbors outside the node. Quadratic in the degree overall.
class LeaveOneOutTree
{
public:
    LeaveOneOutTree(std::span<const double> probs) : probs_ {probs} {}

    void evaluate(const std::vector<Wide>& weight, std::vector<Wide>& hit_out, std::vector<Wide>& miss_out)
    {
        hit_out.assign(probs_.size(), 0.0L);
        miss_out.assign(probs_.size(), 0.0L);
        hit_out_ = &hit_out;
        miss_out_ = &miss_out;
        descend(0, probs_.size(), weight);
    }

private:
    void descend(std::size_t lo, std::size_t hi, const std::vector<Wide>& functional)
    {
        if (hi - lo == 1) {
            (*hit_out_)[lo] = functional[1];
            (*miss_out_)[lo] = functional[0];
            return;
        }
        const std::size_t mid = lo + (hi - lo) / 2;
        push(lo, mid, poisson_binomial(probs_.subspan(mid, hi - mid)), functional);
        push(mid, hi, poisson_binomial(probs_.subspan(lo, mid - lo)), functional);
    }

    void push(std::size_t lo, std::size_t hi, const std::vector<Wide>& sibling, const std::vector<Wide>& functional)
    {
        const std::size_t size = hi - lo + 1;
        std::vector<Wide> child(size, 0.0L);
        for (std::size_t b = 0; b < sibling.size(); ++b) {
            const Wide w = sibling[b];
            const Wide* f = functional.data() + b;
            for (std::size_t c = 0; c < size; ++c) child[c] += w * f[c];
        }
        descend(lo, hi, child);
    }

    std::span<const double> probs_;
    std::vector<Wide>* hit_out_ = nullptr;
    std::vector<Wide>* miss_out_ = nullptr;
};

} // namespace

FactorMode parse_factor_mode(std::string_view text)
{
    if (text == "auto") return FactorMode::Auto;
    if (text == "exact_enum") return FactorMode::ExactEnum;
    if (text == "onecoin_dp") return FactorMode::OneCoinDP;
    if (text == "monte_carlo") return FactorMode::MonteCarlo;
    throw UsageError {"unknown factor mode '" + std::string {text} + "'"};
}

const char* to_string(FactorMode mode)
{
    switch (mode) {
    case FactorMode::Auto: return "auto";
    case FactorMode::ExactEnum: return "exact_enum";
    case FactorMode::OneCoinDP: return "onecoin_dp";
    case FactorMode::MonteCarlo: return "monte_carlo";
    }
    return "?";
}

MessageState MessageState::initial(const Observations& data, const Matrix& feature_rows)
{
    const auto edges = static_cast<Eigen::Index>(data.num_answers());
    const auto k = static_cast<Eigen::Index>(data.num_classes());
    MessageState state;
    state.task_to_worker = Matrix::Constant(edges, k, 1.0 / static_cast<double>(k));
    state.worker_to_task = Matrix::Constant(edges, k, 1.0 / static_cast<double>(k));
    state.feature = feature_rows;
    return state;
}

Matrix factor_messages_exact(const WorkerPrior& prior, std::span<const Label> answers, const Matrix& incoming,
                             Index degree_cap)
{
    check_neighborhood(prior, answers, incoming);
    const Index n = answers.size();
    const Index k = prior.num_classes();
    if (n > degree_cap) {
        throw UsageError {"worker degree " + std::to_string(n) + " exceeds the enumeration cap " +
                          std::to_string(degree_cap) + "; use onecoin_dp or monte_carlo"};
    }
    Matrix log_m(incoming.rows(), incoming.cols());
    for (Eigen::Index j = 0; j < incoming.rows(); ++j) {
        const double total = incoming.row(j).sum();
        for (Eigen::Index z = 0; z < incoming.cols(); ++z) {
            log_m(j, z) = std::log(std::max(incoming(j, z) / total, message_floor));
        }
    }

    Index states = 1;
    for (Index j = 0; j < n; ++j) states *= k;

    // Log weight of every joint labeling: log g_u plus every incoming message.
    std::vector<double> joint(states);
    std::vector<Label> z(n, 0);
    CountMatrix counts = CountMatrix::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (Index s = 0; s < states; ++s) {
        counts.setZero();
        double msg_sum = 0.0;
        for (Index j = 0; j < n; ++j) {
            counts(z[j], answers[j]) += 1.0;
            msg_sum += log_m(static_cast<Eigen::Index>(j), z[j]);
        }
        joint[s] = log_marginal(prior, counts) + msg_sum;
        for (Index j = 0; j < n && ++z[j] == k; ++j) z[j] = 0;
    }

    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (Index t = 0; t < n; ++t) {
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Constant(static_cast<Eigen::Index>(k),
                                                              -std::numeric_limits<double>::infinity());
        std::fill(z.begin(), z.end(), 0);
        for (Index s = 0; s < states; ++s) {
            const double w = joint[s] - log_m(static_cast<Eigen::Index>(t), z[t]);
            double& slot = acc(z[t]);
            const double hi = std::max(slot, w);
            slot = hi + std::log(std::exp(slot - hi) + std::exp(w - hi));
            for (Index j = 0; j < n && ++z[j] == k; ++j) z[j] = 0;
        }
        normalize_log_row(acc);
        out.row(static_cast<Eigen::Index>(t)) = acc;
    }
    return out;
}

Eigen::RowVectorXd factor_message_exact(const WorkerPrior& prior, std::span<const Label> answers,
                                        const Matrix& incoming, Index target, Index degree_cap)
{
    if (target >= answers.size()) throw UsageError {"target out of range"};
    return factor_messages_exact(prior, answers, incoming, degree_cap).row(static_cast<Eigen::Index>(target));
}

Eigen::RowVectorXd factor_message_onecoin_dp(const WorkerPrior& prior, std::span<const Label> answers,
                                             const Matrix& incoming, Index target)
{
    if (prior.family() != PriorFamily::OneCoin) throw UsageError {"onecoin_dp requires a one-coin prior"};
    check_neighborhood(prior, answers, incoming);
    if (target >= answers.size()) throw UsageError {"target out of range"};
    std::vector<double> probs = correct_probabilities(answers, incoming);
    probs.erase(probs.begin() + static_cast<std::ptrdiff_t>(target));
    const std::vector<Wide> dist = poisson_binomial(probs);
    const std::vector<Wide> weight = onecoin_weights(prior, answers.size());
    Wide h = 0.0L, m = 0.0L;
    for (std::size_t c = 0; c < dist.size(); ++c) {
        h += dist[c] * weight[c + 1];
        m += dist[c] * weight[c];
    }
    return onecoin_message(prior.num_classes(), answers[target], h, m);
}

Matrix factor_messages_onecoin_dp(const WorkerPrior& prior, std::span<const Label> answers, const Matrix& incoming)
{
    if (prior.family() != PriorFamily::OneCoin) throw UsageError {"onecoin_dp requires a one-coin prior"};
    check_neighborhood(prior, answers, incoming);
    const Index n = answers.size();
    const std::vector<double> probs = correct_probabilities(answers, incoming);
    std::vector<Wide> hit_out, miss_out;
    LeaveOneOutTree {probs}.evaluate(onecoin_weights(prior, n), hit_out, miss_out);

    Matrix out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(prior.num_classes()));
    for (Index t = 0; t < n; ++t) {
        out.row(static_cast<Eigen::Index>(t)) = onecoin_message(prior.num_classes(), answers[t], hit_out[t], miss_out[t]);
    }
    return out;
}

Matrix factor_messages_mc(const WorkerPrior& prior, std::span<const Label> answers, const Matrix& incoming,
                          Index samples, std::uint64_t seed)
{
    check_neighborhood(prior, answers, incoming);
    if (samples == 0) throw UsageError {"Monte-Carlo message needs at least one sample"};
    const Index n = answers.size();
    const auto k = static_cast<Eigen::Index>(prior.num_classes());

    Matrix normalized = incoming;
    for (Eigen::Index j = 0; j < normalized.rows(); ++j) normalized.row(j) /= normalized.row(j).sum();

    Rng rng {seed};
    std::vector<ConfusionMatrix> thetas(samples);
    // log <theta_s[., y_j], m_j> for every sample s and neighbor j.
    Matrix log_link(static_cast<Eigen::Index>(samples), static_cast<Eigen::Index>(n));
    std::vector<double> total(samples, 0.0);
    for (Index s = 0; s < samples; ++s) {
        thetas[s] = sample_confusion(prior, rng);
        for (Index j = 0; j < n; ++j) {
            const double link = normalized.row(static_cast<Eigen::Index>(j)).dot(thetas[s].col(answers[j]));
            const double v = std::log(std::max(link, message_floor));
            log_link(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(j)) = v;
            total[s] += v;
        }
    }

    Matrix out(static_cast<Eigen::Index>(n), k);
    std::vector<double> terms(samples);
    for (Index t = 0; t < n; ++t) {
        for (Eigen::Index z = 0; z < k; ++z) {
            double top = -std::numeric_limits<double>::infinity();
            for (Index s = 0; s < samples; ++s) {
                const double rest = total[s] - log_link(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t));
                terms[s] = rest + std::log(std::max(thetas[s](z, answers[t]), message_floor));
                top = std::max(top, terms[s]);
            }
            double acc = 0.0;
            for (Index s = 0; s < samples; ++s) acc += std::exp(terms[s] - top);
            out(static_cast<Eigen::Index>(t), z) = top + std::log(acc);
        }
        normalize_log_row(out.row(static_cast<Eigen::Index>(t)));
    }
    return out;
}

Eigen::RowVectorXd factor_message_mc(const WorkerPrior& prior, std::span<const Label> answers,
                                     const Matrix& incoming, Index target, Index samples, std::uint64_t seed)
{
    if (target >= answers.size()) throw UsageError {"target out of range"};
    return factor_messages_mc(prior, answers, incoming, samples, seed).row(static_cast<Eigen::Index>(target));
}

FactorMode resolve_factor_mode(const FactorEvalConfig& config, const WorkerPrior& prior, Index degree)
{
    if (config.mode != FactorMode::Auto) return config.mode;
    if (prior.family() == PriorFamily::OneCoin) return FactorMode::OneCoinDP;
    if (degree <= config.exact_degree_cap) return FactorMode::ExactEnum;
    return FactorMode::MonteCarlo;
}

LabelPosterior bp_beliefs(const Observations& data, const MessageState& messages)
{
    Matrix q = messages.feature;
    for (Index i = 0; i < data.num_tasks(); ++i) {
        auto row = q.row(static_cast<Eigen::Index>(i));
        for (Eigen::Index z = 0; z < row.size(); ++z) row(z) = std::log(std::max(row(z), message_floor));
        for (Index e : data.graph().task_edges(i)) {
            row += messages.worker_to_task.row(static_cast<Eigen::Index>(e)).array().log().matrix();
        }
        normalize_log_row(row);
    }
    return LabelPosterior {std::move(q)};
}

BPResult bp_run(const Observations& data, const Matrix& f_values, const WorkerPrior& prior,
                const BPOptions& options, std::optional<MessageState> warm_start)
{
    if (static_cast<Index>(f_values.rows()) != data.num_tasks() ||
        static_cast<Index>(f_values.cols()) != data.num_classes()) {
        throw UsageError {"f must be N x K"};
    }
    if (prior.num_classes() != data.num_classes()) throw UsageError {"prior K differs from dataset K"};
    const auto& cfg = options.factor;
    if (cfg.samples == 0 || cfg.exact_degree_cap == 0) throw UsageError {"invalid factor configuration"};
    if (!(cfg.damping >= 0.0 && cfg.damping < 1.0)) throw UsageError {"damping must lie in [0, 1)"};

    MessageState state;
    if (warm_start && static_cast<Index>(warm_start->worker_to_task.rows()) == data.num_answers()) {
        state = std::move(*warm_start);
        state.feature = f_values;
        state.converged = false;
    } else {
        state = MessageState::initial(data, f_values);
    }

    const auto k = static_cast<Eigen::Index>(data.num_classes());
    const auto& graph = data.graph();
    Matrix log_feature(f_values.rows(), k);
    for (Eigen::Index i = 0; i < f_values.rows(); ++i) {
        for (Eigen::Index z = 0; z < k; ++z) log_feature(i, z) = std::log(std::max(f_values(i, z), message_floor));
    }

    std::vector<Label> answers;
    Matrix incoming;
    for (Index sweep = 0; sweep < options.max_sweeps; ++sweep) {
        // Task-to-worker: feature message times every other worker message.
        Matrix t2w(state.task_to_worker.rows(), k);
        for (Index i = 0; i < data.num_tasks(); ++i) {
            const auto edges = graph.task_edges(i);
            Eigen::RowVectorXd total = log_feature.row(static_cast<Eigen::Index>(i));
            for (Index e : edges) total += state.worker_to_task.row(static_cast<Eigen::Index>(e)).array().log().matrix();
            for (Index e : edges) {
                auto row = t2w.row(static_cast<Eigen::Index>(e));
                row = total - state.worker_to_task.row(static_cast<Eigen::Index>(e)).array().log().matrix();
                normalize_log_row(row);
            }
        }

        // Worker-to-task through the configured factor evaluator.
        Matrix w2t(state.worker_to_task.rows(), k);
        for (Index u = 0; u < data.num_workers(); ++u) {
            const auto edges = graph.worker_edges(u);
            if (edges.empty()) continue;
            answers.resize(edges.size());
            incoming.resize(static_cast<Eigen::Index>(edges.size()), k);
            for (Index j = 0; j < edges.size(); ++j) {
                answers[j] = data.answer(edges[j]).label;
                incoming.row(static_cast<Eigen::Index>(j)) = t2w.row(static_cast<Eigen::Index>(edges[j]));
            }
            Matrix out;
            switch (resolve_factor_mode(cfg, prior, edges.size())) {
            case FactorMode::OneCoinDP: out = factor_messages_onecoin_dp(prior, answers, incoming); break;
            case FactorMode::ExactEnum:
                out = factor_messages_exact(prior, answers, incoming, cfg.exact_degree_cap);
                break;
            case FactorMode::MonteCarlo:
                out = factor_messages_mc(prior, answers, incoming, cfg.samples,
                                         derive_seed(options.seed, {state.sweeps, u}));
                break;
            case FactorMode::Auto: break;
            }
            for (Index j = 0; j < edges.size(); ++j) {
                auto row = w2t.row(static_cast<Eigen::Index>(edges[j]));
                row = out.row(static_cast<Eigen::Index>(j));
                if (cfg.damping > 0.0) {
                    row = (1.0 - cfg.damping) * row + cfg.damping * state.worker_to_task.row(static_cast<Eigen::Index>(edges[j]));
                }
                normalize_row(row);
            }
        }

        double change = 0.0;
        if (w2t.size() > 0) {
            change = std::max((w2t - state.worker_to_task).cwiseAbs().maxCoeff(),
                              (t2w - state.task_to_worker).cwiseAbs().maxCoeff());
        }
        state.task_to_worker = std::move(t2w);
        state.worker_to_task = std::move(w2t);
        ++state.sweeps;
        state.last_change = change;
        if (change < options.tolerance) {
            state.converged = true;
            break;
        }
    }

    LabelPosterior q = bp_beliefs(data, state);
    return {std::move(q), std::move(state)};
}

} // namespace crowdbp
