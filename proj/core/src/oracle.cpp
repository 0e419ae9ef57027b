#include "crowdbp/oracle.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace crowdbp::oracle {

namespace {

using Counts = std::vector<int>;  // row-major K x K

// log E[prod theta^counts] for the prior, written out from the Dirichlet
// normalizers directly.
double log_moment(const WorkerPrior& prior, const Counts& counts)
{
    const auto k = static_cast<int>(prior.num_classes());
    const auto at = [&](int r, int c) { return counts[static_cast<std::size_t>(r * k + c)]; };
    double total = 0.0;
    switch (prior.family()) {
    case PriorFamily::FullDirichlet: {
        const Matrix& alpha = prior.dirichlet_rows();
        for (int r = 0; r < k; ++r) {
            double a_sum = 0.0, n_sum = 0.0;
            for (int c = 0; c < k; ++c) {
                const double a = alpha(r, c);
                const double n = at(r, c);
                total += std::lgamma(a + n) - std::lgamma(a);
                a_sum += a;
                n_sum += n;
            }
            total -= std::lgamma(a_sum + n_sum) - std::lgamma(a_sum);
        }
        return total;
    }
    case PriorFamily::OneCoin:
    case PriorFamily::TwoCoin: {
        const double a1 = prior.correct_concentration();
        const double a2 = prior.wrong_concentration();
        const double spread = static_cast<double>(k - 1);
        const auto beta_moment = [&](double hits, double misses) {
            return std::lgamma(a1 + hits) + std::lgamma(a2 + misses) - std::lgamma(a1 + a2 + hits + misses) -
                   (std::lgamma(a1) + std::lgamma(a2) - std::lgamma(a1 + a2)) - misses * std::log(spread);
        };
        if (prior.family() == PriorFamily::OneCoin) {
            double hits = 0.0, misses = 0.0;
            for (int r = 0; r < k; ++r) {
                for (int c = 0; c < k; ++c) (r == c ? hits : misses) += at(r, c);
            }
            return beta_moment(hits, misses);
        }
        for (int r = 0; r < k; ++r) {
            double hits = 0.0, misses = 0.0;
            for (int c = 0; c < k; ++c) (r == c ? hits : misses) += at(r, c);
            total += beta_moment(hits, misses);
        }
        return total;
    }
    }
    return total;
}

} // namespace

LabelPosterior enumerate_posterior(const Observations& data, const Matrix& f_values, const WorkerPrior& prior,
                                   const OracleLimits& limits)
{
    const Index n = data.num_tasks();
    const Index k = data.num_classes();
    if (n > limits.max_tasks) throw UsageError {"enumeration oracle limited to " + std::to_string(limits.max_tasks) + " tasks"};
    Index states = 1;
    for (Index i = 0; i < n; ++i) {
        states *= k;
        if (states > limits.max_states) throw UsageError {"enumeration oracle state cap exceeded"};
    }
    if (static_cast<Index>(f_values.rows()) != n || static_cast<Index>(f_values.cols()) != k) {
        throw UsageError {"f must be N x K"};
    }

    const auto kk = static_cast<Eigen::Index>(k);
    std::vector<double> log_weight(states);
    std::vector<Label> z(n, 0);
    std::vector<CountMatrix> counts(data.num_workers(), CountMatrix::Zero(kk, kk));
    for (Index s = 0; s < states; ++s) {
        double w = 0.0;
        for (Index i = 0; i < n; ++i) w += std::log(f_values(static_cast<Eigen::Index>(i), z[i]));
        for (auto& c : counts) c.setZero();
        for (const auto& a : data.answers()) counts[a.worker](z[a.task], a.label) += 1.0;
        for (Index u = 0; u < data.num_workers(); ++u) {
            if (data.graph().worker_degree(u) > 0) w += log_marginal(prior, counts[u]);
        }
        log_weight[s] = w;
        for (Index i = 0; i < n && ++z[i] == k; ++i) z[i] = 0;
    }

    double top = -std::numeric_limits<double>::infinity();
    for (double w : log_weight) top = std::max(top, w);
    if (!std::isfinite(top)) throw NumericalError {"every joint labeling has zero weight"};

    Matrix q = Matrix::Zero(static_cast<Eigen::Index>(n), kk);
    double total = 0.0;
    std::fill(z.begin(), z.end(), 0);
    for (Index s = 0; s < states; ++s) {
        const double w = std::exp(log_weight[s] - top);
        total += w;
        for (Index i = 0; i < n; ++i) q(static_cast<Eigen::Index>(i), z[i]) += w;
        for (Index i = 0; i < n && ++z[i] == k; ++i) z[i] = 0;
    }
    q /= total;
    return LabelPosterior {std::move(q)};
}

double moment_factor_oracle(const WorkerPrior& prior, std::span<const Label> answers, const Matrix& incoming,
                            Index target, Label target_label, const OracleLimits& limits)
{
    const Index n = answers.size();
    const auto k = static_cast<int>(prior.num_classes());
    if (n == 0 || target >= n) throw UsageError {"target out of range"};
    if (n > limits.max_degree) throw UsageError {"moment oracle limited to degree " + std::to_string(limits.max_degree)};
    if (static_cast<Index>(incoming.rows()) != n || incoming.cols() != k) throw UsageError {"incoming must be n x K"};
    if (target_label >= static_cast<Label>(k)) throw UsageError {"target label out of range"};

    std::map<Counts, double> poly;
    Counts seed(static_cast<std::size_t>(k * k), 0);
    ++seed[static_cast<std::size_t>(static_cast<int>(target_label) * k + static_cast<int>(answers[target]))];
    poly.emplace(std::move(seed), 1.0);

    for (Index j = 0; j < n; ++j) {
        if (j == target) continue;
        const double row_total = incoming.row(static_cast<Eigen::Index>(j)).sum();
        std::map<Counts, double> next;
        for (const auto& [monomial, coef] : poly) {
            for (int z = 0; z < k; ++z) {
                const double m = incoming(static_cast<Eigen::Index>(j), z) / row_total;
                if (m == 0.0) continue;
                Counts grown = monomial;
                ++grown[static_cast<std::size_t>(z * k + static_cast<int>(answers[j]))];
                next[std::move(grown)] += coef * m;
            }
        }
        poly = std::move(next);
    }

    double value = 0.0;
    for (const auto& [monomial, coef] : poly) value += coef * std::exp(log_moment(prior, monomial));
    return value;
}

Eigen::RowVectorXd moment_factor_message(const WorkerPrior& prior, std::span<const Label> answers,
                                         const Matrix& incoming, Index target, const OracleLimits& limits)
{
    const auto k = static_cast<Eigen::Index>(prior.num_classes());
    Eigen::RowVectorXd msg(k);
    for (Eigen::Index z = 0; z < k; ++z) {
        msg(z) = moment_factor_oracle(prior, answers, incoming, target, static_cast<Label>(z), limits);
    }
    return msg / msg.sum();
}

} // namespace crowdbp::oracle
