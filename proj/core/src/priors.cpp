#include "crowdbp/priors.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <boost/math/special_functions/digamma.hpp>

namespace crowdbp {

namespace {

void require_positive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw UsageError {std::string {what} + " must be a positive finite concentration"};
    }
}

Matrix coin_rows(Index k, double correct, double wrong)
{
    const auto n = static_cast<Eigen::Index>(k);
    Matrix rows = Matrix::Constant(n, n, wrong / static_cast<double>(k - 1));
    rows.diagonal().setConstant(correct);
    return rows;
}

std::span<const double> row_span(const Matrix& m, Eigen::Index r)
{
    return {m.data() + r * m.cols(), static_cast<std::size_t>(m.cols())};
}

} // namespace

WorkerPrior WorkerPrior::full_dirichlet(Matrix alpha)
{
    if (alpha.rows() != alpha.cols() || alpha.rows() < 2) {
        throw UsageError {"Dirichlet prior needs a square K x K concentration matrix with K >= 2"};
    }
    for (Eigen::Index i = 0; i < alpha.size(); ++i) require_positive(alpha.data()[i], "alpha");
    WorkerPrior p;
    p.family_ = PriorFamily::FullDirichlet;
    p.num_classes_ = static_cast<Index>(alpha.rows());
    p.rows_ = std::move(alpha);
    return p;
}

WorkerPrior WorkerPrior::full_dirichlet(Index num_classes, double diagonal, double off_diagonal)
{
    if (num_classes < 2) throw UsageError {"prior needs K >= 2"};
    const auto n = static_cast<Eigen::Index>(num_classes);
    Matrix alpha = Matrix::Constant(n, n, off_diagonal);
    alpha.diagonal().setConstant(diagonal);
    return full_dirichlet(std::move(alpha));
}

WorkerPrior WorkerPrior::one_coin(Index num_classes, double correct, double wrong)
{
    if (num_classes < 2) throw UsageError {"prior needs K >= 2"};
    require_positive(correct, "alpha_1");
    require_positive(wrong, "alpha_2");
    WorkerPrior p;
    p.family_ = PriorFamily::OneCoin;
    p.num_classes_ = num_classes;
    p.correct_ = correct;
    p.wrong_ = wrong;
    p.rows_ = coin_rows(num_classes, correct, wrong);
    return p;
}

WorkerPrior WorkerPrior::two_coin(Index num_classes, double correct, double wrong)
{
    WorkerPrior p = one_coin(num_classes, correct, wrong);
    p.family_ = PriorFamily::TwoCoin;
    return p;
}

WorkerPrior WorkerPrior::parse(std::string_view text, Index num_classes)
{
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) {
        throw UsageError {"prior must look like family:a,b (got '" + std::string {text} + "')"};
    }
    const std::string family {text.substr(0, colon)};
    const std::string params {text.substr(colon + 1)};
    double a = 0.0, b = 0.0;
    char comma = 0;
    std::istringstream in {params};
    if (!(in >> a >> comma >> b) || comma != ',' || !(in >> std::ws).eof()) {
        throw UsageError {"cannot parse prior parameters '" + params + "'"};
    }
    if (family == "one_coin") return one_coin(num_classes, a, b);
    if (family == "two_coin") return two_coin(num_classes, a, b);
    if (family == "dirichlet") return full_dirichlet(num_classes, a, b);
    throw UsageError {"unknown prior family '" + family + "'"};
}

std::string WorkerPrior::to_string() const
{
    std::ostringstream out;
    out.precision(17);
    switch (family_) {
    case PriorFamily::OneCoin: out << "one_coin:" << correct_ << ',' << wrong_; break;
    case PriorFamily::TwoCoin: out << "two_coin:" << correct_ << ',' << wrong_; break;
    case PriorFamily::FullDirichlet:
        out << "dirichlet:" << rows_(0, 0) << ',' << rows_(0, 1);
        break;
    }
    return out.str();
}

double log_gamma(double x)
{
    return std::lgamma(x);
}

double digamma(double x)
{
    return boost::math::digamma(x);
}

double log_multivariate_beta(std::span<const double> a)
{
    double sum = 0.0, acc = 0.0;
    for (double v : a) {
        acc += std::lgamma(v);
        sum += v;
    }
    return acc - std::lgamma(sum);
}

double log_beta(double a, double b)
{
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

ConfusionMatrix sample_confusion(const WorkerPrior& prior, Rng& rng)
{
    const auto k = static_cast<Eigen::Index>(prior.num_classes());
    ConfusionMatrix theta(k, k);
    switch (prior.family()) {
    case PriorFamily::FullDirichlet: {
        const Matrix& alpha = prior.dirichlet_rows();
        for (Eigen::Index r = 0; r < k; ++r) {
            double total = 0.0;
            while (!(total > 0.0)) {
                total = 0.0;
                for (Eigen::Index c = 0; c < k; ++c) {
                    theta(r, c) = sample_gamma(rng, alpha(r, c));
                    total += theta(r, c);
                }
            }
            theta.row(r) /= total;
        }
        break;
    }
    case PriorFamily::OneCoin:
    case PriorFamily::TwoCoin: {
        const bool shared = prior.family() == PriorFamily::OneCoin;
        double p = sample_beta(rng, prior.correct_concentration(), prior.wrong_concentration());
        for (Eigen::Index r = 0; r < k; ++r) {
            if (!shared && r > 0) p = sample_beta(rng, prior.correct_concentration(), prior.wrong_concentration());
            theta.row(r).setConstant((1.0 - p) / static_cast<double>(k - 1));
            theta(r, r) = p;
        }
        break;
    }
    }
    return theta;
}

ConfusionMatrix sample_confusion(const WorkerPrior& prior, std::uint64_t seed)
{
    Rng rng {seed};
    return sample_confusion(prior, rng);
}

double log_marginal(const WorkerPrior& prior, const CountMatrix& counts)
{
    const auto k = static_cast<Eigen::Index>(prior.num_classes());
    if (counts.rows() != k || counts.cols() != k) throw UsageError {"count matrix shape does not match prior"};
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
        if (!(counts.data()[i] >= 0.0)) throw UsageError {"counts must be nonnegative"};
    }
    const double a1 = prior.correct_concentration();
    const double a2 = prior.wrong_concentration();
    const double log_spread = std::log(static_cast<double>(k - 1));
    switch (prior.family()) {
    case PriorFamily::FullDirichlet: {
        const Matrix& alpha = prior.dirichlet_rows();
        const Matrix posterior = alpha + counts;
        double total = 0.0;
        for (Eigen::Index r = 0; r < k; ++r) {
            total += log_multivariate_beta(row_span(posterior, r)) - log_multivariate_beta(row_span(alpha, r));
        }
        return total;
    }
    case PriorFamily::OneCoin: {
        const double correct = counts.diagonal().sum();
        const double wrong = counts.sum() - correct;
        return log_beta(a1 + correct, a2 + wrong) - log_beta(a1, a2) - wrong * log_spread;
    }
    case PriorFamily::TwoCoin: {
        double total = 0.0;
        for (Eigen::Index r = 0; r < k; ++r) {
            const double correct = counts(r, r);
            const double wrong = counts.row(r).sum() - correct;
            total += log_beta(a1 + correct, a2 + wrong) - log_beta(a1, a2) - wrong * log_spread;
        }
        return total;
    }
    }
    return 0.0;
}

Matrix expected_log_theta(const Matrix& beta)
{
    Matrix out(beta.rows(), beta.cols());
    for (Eigen::Index r = 0; r < beta.rows(); ++r) {
        double total = 0.0;
        for (Eigen::Index c = 0; c < beta.cols(); ++c) {
            require_positive(beta(r, c), "beta");
            total += beta(r, c);
        }
        const double psi_total = digamma(total);
        for (Eigen::Index c = 0; c < beta.cols(); ++c) out(r, c) = digamma(beta(r, c)) - psi_total;
    }
    return out;
}

double kl_dirichlet(std::span<const double> beta, std::span<const double> alpha)
{
    if (beta.size() != alpha.size() || beta.empty()) throw UsageError {"Dirichlet parameter lengths differ"};
    double beta_total = 0.0, alpha_total = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k) {
        require_positive(beta[k], "beta");
        require_positive(alpha[k], "alpha");
        beta_total += beta[k];
        alpha_total += alpha[k];
    }
    const double psi_total = digamma(beta_total);
    double kl = std::lgamma(beta_total) - std::lgamma(alpha_total);
    for (std::size_t k = 0; k < beta.size(); ++k) {
        kl += std::lgamma(alpha[k]) - std::lgamma(beta[k]);
        kl += (beta[k] - alpha[k]) * (digamma(beta[k]) - psi_total);
    }
    // Rounding can leave a -1e-16 residue at beta == alpha.
    return kl < 0.0 ? 0.0 : kl;
}

Vector posterior_mean_diagonal(const Matrix& beta)
{
    Vector out(beta.rows());
    for (Eigen::Index r = 0; r < beta.rows(); ++r) out(r) = beta(r, r) / beta.row(r).sum();
    return out;
}

} // namespace crowdbp
