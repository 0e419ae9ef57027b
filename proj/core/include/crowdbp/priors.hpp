#pragma once

#include <span>
#include <string>
#include <string_view>

#include "crowdbp/common.hpp"
#include "crowdbp/rng.hpp"

namespace crowdbp {

enum class PriorFamily { FullDirichlet, OneCoin, TwoCoin };

/// Row-stochastic K x K matrix; entry (k, k') is P(answer k' | truth k).
using ConfusionMatrix = Matrix;

/// K x K nonnegative (possibly fractional) counts of (truth, answer) pairs.
using CountMatrix = Matrix;

/**
 * Dirichlet-family prior over a worker's confusion matrix.
 *
 * FullDirichlet: row k of theta ~ Dir(alpha row k), rows independent.
 * OneCoin:       a single correctness p ~ Beta(a1, a2) shared by every row;
 *                the mistake mass (1 - p) is spread evenly over the K - 1
 *                wrong answers.
 * TwoCoin:       an independent p_k ~ Beta(a1, a2) per row, same spreading.
 */
class WorkerPrior
{
public:
    static WorkerPrior full_dirichlet(Matrix alpha);
    static WorkerPrior full_dirichlet(Index num_classes, double diagonal, double off_diagonal);
    static WorkerPrior one_coin(Index num_classes, double correct, double wrong);
    static WorkerPrior two_coin(Index num_classes, double correct, double wrong);

    /// Parses "one_coin:a1,a2", "two_coin:a1,a2" or "dirichlet:diag,off".
    static WorkerPrior parse(std::string_view text, Index num_classes);

    PriorFamily family() const noexcept { return family_; }
    Index num_classes() const noexcept { return num_classes_; }

    /// Coin parameters (a1, a2); meaningful for OneCoin/TwoCoin.
    double correct_concentration() const noexcept { return correct_; }
    double wrong_concentration() const noexcept { return wrong_; }

    /// FullDirichlet: the alpha matrix itself. Coin families: the per-row
    /// Dirichlet with a1 on the diagonal and a2 / (K - 1) off it, which keeps
    /// the prior means of every entry.
    const Matrix& dirichlet_rows() const noexcept { return rows_; }

    std::string to_string() const;

private:
    WorkerPrior() = default;

    PriorFamily family_ = PriorFamily::FullDirichlet;
    Index num_classes_ = 0;
    double correct_ = 0.0;
    double wrong_ = 0.0;
    Matrix rows_;
};

// Special functions. log_gamma wraps std::lgamma; digamma is boost's.
double log_gamma(double x);
double digamma(double x);
/// log of the multivariate Beta function, sum lgamma(a_k) - lgamma(sum a_k).
double log_multivariate_beta(std::span<const double> a);
double log_beta(double a, double b);

ConfusionMatrix sample_confusion(const WorkerPrior& prior, Rng& rng);
ConfusionMatrix sample_confusion(const WorkerPrior& prior, std::uint64_t seed);

/// log of the integral of p(theta | prior) * prod theta_{k1 k2}^{gamma_{k1 k2}}.
double log_marginal(const WorkerPrior& prior, const CountMatrix& counts);

/// E[log theta] under independent Dirichlet rows with parameters beta.
Matrix expected_log_theta(const Matrix& beta);

/// KL(Dir(beta) || Dir(alpha)).
double kl_dirichlet(std::span<const double> beta, std::span<const double> alpha);

/// beta_kk / sum_k' beta_kk' per row.
Vector posterior_mean_diagonal(const Matrix& beta);

} // namespace crowdbp
