#include "doctest.h"

#include "crowdbp/factor_bp.hpp"
#include "crowdbp/oracle.hpp"
#include "support.hpp"

using namespace crowdbp;
using support::beta_moment;

namespace {

Matrix uniform_rows(Index n, Index k)
{
    return Matrix::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k), 1.0 / static_cast<double>(k));
}

} // namespace

TEST_CASE("enumeration on a single edge")
{
    const Observations data {1, 1, 2, {{0, 0, 0}}};
    const auto q = oracle::enumerate_posterior(data, uniform_rows(1, 2), WorkerPrior::one_coin(2, 2.0, 1.0));
    CHECK(q(0, 0) == doctest::Approx(beta_moment(2, 1, 1, 0)).epsilon(1e-14));
}

TEST_CASE("enumeration without workers returns f")
{
    const Observations data {3, 1, 3, {}};
    Rng rng {1};
    const Matrix f = support::random_simplex_rows(rng, 3, 3);
    const auto q = oracle::enumerate_posterior(data, f, WorkerPrior::one_coin(3, 2.0, 1.0));
    CHECK(max_abs_difference(q.matrix(), f) < 1e-14);
}

TEST_CASE("enumeration of two tasks sharing a worker")
{
    const Observations data {2, 1, 2, {{0, 0, 0}, {1, 0, 0}}};
    const auto q = oracle::enumerate_posterior(data, uniform_rows(2, 2), WorkerPrior::one_coin(2, 2.0, 1.0));
    const double both = beta_moment(2, 1, 2, 0), mixed = beta_moment(2, 1, 1, 1), none = beta_moment(2, 1, 0, 2);
    CHECK(both == doctest::Approx(0.5));
    CHECK(mixed == doctest::Approx(1.0 / 6.0));
    CHECK(none == doctest::Approx(1.0 / 6.0));
    const double total = both + 2 * mixed + none;
    CHECK(q(0, 0) == doctest::Approx((both + mixed) / total).epsilon(1e-14));
    CHECK(q(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("enumeration limits")
{
    const Observations big {13, 1, 2, {}};
    CHECK_THROWS_AS(oracle::enumerate_posterior(big, uniform_rows(13, 2), WorkerPrior::one_coin(2, 2, 1)), UsageError);
    const Observations wide {10, 1, 5, {}};
    CHECK_THROWS_AS(oracle::enumerate_posterior(wide, uniform_rows(10, 5), WorkerPrior::one_coin(5, 2, 1)), UsageError);
}

TEST_CASE("enumerated marginals are normalized and equivariant")
{
    Rng rng {2};
    const std::vector<Label> perm {2, 0, 1};
    for (int trial = 0; trial < 20; ++trial) {
        const Observations data = support::random_observations(rng, 6, 4, 3, 0.5);
        const auto prior = support::random_prior(rng, 3, support::Family::Dirichlet);
        const Matrix f = support::random_simplex_rows(rng, 6, 3);
        const auto q = oracle::enumerate_posterior(data, f, prior);
        for (Index i = 0; i < 6; ++i) CHECK(std::abs(q.matrix().row(static_cast<Eigen::Index>(i)).sum() - 1.0) < 1e-12);
        const auto moved = oracle::enumerate_posterior(
            support::permute_classes(data, perm), support::permute_columns(f, perm),
            WorkerPrior::full_dirichlet(support::permute_both(prior.dirichlet_rows(), perm)));
        CHECK(max_abs_difference(support::permute_columns(q.matrix(), perm), moved.matrix()) < 1e-12);
    }
}

TEST_CASE("moment oracle on degree one is the Beta mean")
{
    const auto prior = WorkerPrior::one_coin(2, 2.0, 1.0);
    const std::vector<Label> answers {0};
    CHECK(oracle::moment_factor_oracle(prior, answers, uniform_rows(1, 2), 0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(oracle::moment_factor_oracle(prior, answers, uniform_rows(1, 2), 0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("moment oracle for a Dirichlet prior by hand")
{
    Matrix alpha(2, 2);
    alpha << 3, 1, 2, 2;
    const auto prior = WorkerPrior::full_dirichlet(alpha);
    const std::vector<Label> answers {0, 0};
    Matrix in(2, 2);
    in << 0.5, 0.5, 0.3, 0.7;
    // E[theta_00 (0.3 theta_00 + 0.7 theta_10)] with independent rows.
    const double e00 = 3.0 / 4.0, e00sq = 3.0 * 4.0 / (4.0 * 5.0), e10 = 2.0 / 4.0;
    CHECK(oracle::moment_factor_oracle(prior, answers, in, 0, 0) == doctest::Approx(0.3 * e00sq + 0.7 * e00 * e10).epsilon(1e-14));
}

TEST_CASE("moment oracle is symmetric under a flat prior")
{
    const auto prior = WorkerPrior::one_coin(2, 1.0, 1.0);
    const std::vector<Label> answers {0, 1, 1};
    const double v = oracle::moment_factor_oracle(prior, answers, uniform_rows(3, 2), 0, 0);
    for (Index t = 0; t < 3; ++t) {
        for (Label z = 0; z < 2; ++z) CHECK(oracle::moment_factor_oracle(prior, answers, uniform_rows(3, 2), t, z) == doctest::Approx(v).epsilon(1e-14));
    }
}

TEST_CASE("moment oracle agrees with enumeration")
{
    Rng rng {3};
    for (int trial = 0; trial < 50; ++trial) {
        const Index k = support::uniform_index(rng, 2, 3);
        const auto prior = support::random_prior(rng, k);
        std::vector<Label> answers(4);
        for (auto& a : answers) a = static_cast<Label>(support::uniform_index(rng, 0, k - 1));
        const Matrix in = support::random_simplex_rows(rng, 4, k);
        const Index t = support::uniform_index(rng, 0, 3);
        const auto exact = factor_message_exact(prior, answers, in, t);
        CHECK((oracle::moment_factor_message(prior, answers, in, t) - exact).cwiseAbs().maxCoeff() < 1e-10);
        // Unnormalized values share one constant across labels.
        const double ratio = oracle::moment_factor_oracle(prior, answers, in, t, 1) /
                             oracle::moment_factor_oracle(prior, answers, in, t, 0);
        CHECK(ratio == doctest::Approx(exact(1) / exact(0)).epsilon(1e-10));
    }
}

TEST_CASE("moment oracle limits")
{
    const auto prior = WorkerPrior::one_coin(2, 2.0, 1.0);
    const std::vector<Label> answers(13, 0);
    CHECK_THROWS_AS(oracle::moment_factor_oracle(prior, answers, uniform_rows(13, 2), 0, 0), UsageError);
    CHECK_THROWS_AS(oracle::moment_factor_oracle(prior, std::vector<Label> {0}, uniform_rows(1, 2), 0, 2), UsageError);
}
