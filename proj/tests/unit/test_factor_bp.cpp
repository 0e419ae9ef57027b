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

double max_diff(const Eigen::RowVectorXd& a, const Eigen::RowVectorXd& b)
{
    return (a - b).cwiseAbs().maxCoeff();
}

// Hand expansion of the two-neighbor one-coin message with uniform m_j:
// weight(z_i) = sum_{z_j} 0.5 * E[theta_{z_i,0} theta_{z_j,0}].
Eigen::RowVectorXd two_task_reference(double a1, double a2)
{
    const double hit = 0.5 * (beta_moment(a1, a2, 2, 0) + beta_moment(a1, a2, 1, 1));
    const double miss = 0.5 * (beta_moment(a1, a2, 1, 1) + beta_moment(a1, a2, 0, 2));
    Eigen::RowVectorXd r(2);
    r << hit / (hit + miss), miss / (hit + miss);
    return r;
}

} // namespace

TEST_CASE("factor mode parsing")
{
    CHECK(parse_factor_mode("onecoin_dp") == FactorMode::OneCoinDP);
    CHECK(std::string {to_string(FactorMode::MonteCarlo)} == "monte_carlo");
    CHECK_THROWS_AS(parse_factor_mode("fft"), UsageError);
}

TEST_CASE("exact message for a single-task worker is the Beta mean")
{
    const auto prior = WorkerPrior::one_coin(2, 2.0, 1.0);
    const std::vector<Label> answers {0};
    const auto msg = factor_message_exact(prior, answers, uniform_rows(1, 2), 0);
    CHECK(msg(0) == doctest::Approx(beta_moment(2, 1, 1, 0)).epsilon(1e-14));
    CHECK(msg(1) == doctest::Approx(beta_moment(2, 1, 0, 1)).epsilon(1e-14));
}

TEST_CASE("exact message for the two-task example")
{
    const auto prior = WorkerPrior::one_coin(2, 2.0, 1.0);
    const std::vector<Label> answers {0, 0};
    const auto msg = factor_message_exact(prior, answers, uniform_rows(2, 2), 0);
    CHECK(max_diff(msg, two_task_reference(2, 1)) < 1e-14);
    CHECK(msg(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("flat prior with uniform beliefs gives uniform messages")
{
    const auto prior = WorkerPrior::one_coin(2, 1.0, 1.0);
    const std::vector<Label> answers {0, 1, 1, 0};
    const Matrix in = uniform_rows(4, 2);
    CHECK(max_diff(factor_message_exact(prior, answers, in, 2), Eigen::RowVectorXd::Constant(2, 0.5)) < 1e-14);
    CHECK(max_diff(factor_message_onecoin_dp(prior, answers, in, 2), Eigen::RowVectorXd::Constant(2, 0.5)) < 1e-14);
}

TEST_CASE("exact enumeration refuses large degrees")
{
    const auto prior = WorkerPrior::one_coin(2, 2.0, 1.0);
    const std::vector<Label> answers(12, 0);
    CHECK_THROWS_AS(factor_message_exact(prior, answers, uniform_rows(12, 2), 0, 10), UsageError);
}

TEST_CASE("one-coin DP matches enumeration")
{
    const auto prior = WorkerPrior::one_coin(2, 2.0, 1.0);
    const std::vector<Label> two {0, 0};
    CHECK(max_diff(factor_message_onecoin_dp(prior, two, uniform_rows(2, 2), 0),
                   factor_message_exact(prior, two, uniform_rows(2, 2), 0)) < 1e-14);

    Rng rng {7};
    for (int trial = 0; trial < 50; ++trial) {
        const Index k = support::uniform_index(rng, 2, 3);
        const auto p = support::random_prior(rng, k, support::Family::OneCoin);
        std::vector<Label> answers(7);
        for (auto& a : answers) a = static_cast<Label>(support::uniform_index(rng, 0, k - 1));
        const Matrix in = support::random_simplex_rows(rng, 7, k);
        const Matrix all = factor_messages_onecoin_dp(p, answers, in);
        for (Index t = 0; t < 7; ++t) {
            const auto exact = factor_message_exact(p, answers, in, t);
            CHECK(max_diff(factor_message_onecoin_dp(p, answers, in, t), exact) < 1e-12);
            CHECK(max_diff(all.row(static_cast<Eigen::Index>(t)), exact) < 1e-12);
        }
    }
}

TEST_CASE("one-coin DP without other neighbors is the moment message")
{
    const auto prior = WorkerPrior::one_coin(3, 3.0, 2.0);
    const std::vector<Label> answers {1};
    const auto msg = factor_message_onecoin_dp(prior, answers, uniform_rows(1, 3), 0);
    const double hit = beta_moment(3, 2, 1, 0), miss = beta_moment(3, 2, 0, 1) / 2.0;
    CHECK(msg(1) == doctest::Approx(hit / (hit + 2 * miss)).epsilon(1e-14));
    CHECK(msg(0) == doctest::Approx(miss / (hit + 2 * miss)).epsilon(1e-14));
    CHECK_THROWS_AS(factor_message_onecoin_dp(WorkerPrior::two_coin(3, 3.0, 2.0), answers, uniform_rows(1, 3), 0),
                    UsageError);
}

TEST_CASE("one-coin DP stays finite for very high degrees")
{
    // A spammer-like worker: a thousand neighbors, beliefs near chance.
    Rng rng {13};
    for (Index k : {2u, 3u}) {
        const Index n = 1000;
        std::vector<Label> answers(n);
        for (auto& a : answers) a = static_cast<Label>(support::uniform_index(rng, 0, k - 1));
        Matrix in = uniform_rows(n, k);
        in += 0.05 * (support::random_simplex_rows(rng, n, k) - uniform_rows(n, k));
        const auto prior = WorkerPrior::one_coin(k, 2.0, 1.4);
        const Matrix all = factor_messages_onecoin_dp(prior, answers, in);
        CHECK(all.allFinite());
        for (Index t = 0; t < n; t += 97) {
            const auto r = static_cast<Eigen::Index>(t);
            CHECK(all.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(max_diff(all.row(r), factor_message_onecoin_dp(prior, answers, in, t)) < 1e-10);
        }
    }
}

TEST_CASE("Monte-Carlo messages")
{
    const auto prior = WorkerPrior::one_coin(2, 2.0, 1.0);
    const std::vector<Label> two {0, 0};
    CHECK(max_diff(factor_message_mc(prior, two, uniform_rows(2, 2), 0, 100000, 1), two_task_reference(2, 1)) < 0.01);

    const auto flat = WorkerPrior::one_coin(2, 1.0, 1.0);
    CHECK(max_diff(factor_message_mc(flat, two, uniform_rows(2, 2), 0, 10000, 2), Eigen::RowVectorXd::Constant(2, 0.5)) <
          0.02);

    CHECK(factor_message_mc(prior, two, uniform_rows(2, 2), 1, 50, 9) ==
          factor_message_mc(prior, two, uniform_rows(2, 2), 1, 50, 9));
}

TEST_CASE("Monte-Carlo messages at S = 400 are usually within 0.05 TV")
{
    Rng rng {17};
    int good = 0;
    const int trials = 200;
    for (int trial = 0; trial < trials; ++trial) {
        const Index k = support::uniform_index(rng, 2, 3);
        const auto prior = support::random_prior(rng, k);
        std::vector<Label> answers(4);
        for (auto& a : answers) a = static_cast<Label>(support::uniform_index(rng, 0, k - 1));
        const Matrix in = support::random_simplex_rows(rng, 4, k);
        const auto exact = factor_message_exact(prior, answers, in, 0);
        const auto mc = factor_message_mc(prior, answers, in, 0, 400, static_cast<std::uint64_t>(trial));
        if (support::total_variation(mc, exact) < 0.05) ++good;
    }
    CHECK(good >= trials * 95 / 100);
}

TEST_CASE("auto mode resolution")
{
    FactorEvalConfig cfg;
    CHECK(resolve_factor_mode(cfg, WorkerPrior::one_coin(2, 2, 1), 500) == FactorMode::OneCoinDP);
    CHECK(resolve_factor_mode(cfg, WorkerPrior::two_coin(2, 2, 1), 10) == FactorMode::ExactEnum);
    CHECK(resolve_factor_mode(cfg, WorkerPrior::two_coin(2, 2, 1), 11) == FactorMode::MonteCarlo);
    cfg.mode = FactorMode::MonteCarlo;
    CHECK(resolve_factor_mode(cfg, WorkerPrior::one_coin(2, 2, 1), 3) == FactorMode::MonteCarlo);
}

TEST_CASE("bp on a single edge")
{
    const Observations data {1, 1, 2, {{0, 0, 0}}};
    const auto result = bp_run(data, uniform_rows(1, 2), WorkerPrior::one_coin(2, 2.0, 1.0));
    CHECK(result.q(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(result.messages.converged);
}

TEST_CASE("bp without workers returns the feature rows")
{
    const Observations data {2, 1, 2, {}};
    Matrix f(2, 2);
    f << 0.9, 0.1, 0.35, 0.65;
    const auto result = bp_run(data, f, WorkerPrior::one_coin(2, 2.0, 1.0));
    CHECK(max_abs_difference(result.q.matrix(), f) < 1e-15);
}

TEST_CASE("bp is exact on small trees")
{
    Rng rng {19};
    BPOptions options;
    options.factor.mode = FactorMode::ExactEnum;
    options.factor.exact_degree_cap = 12;
    options.tolerance = 1e-14;
    for (int trial = 0; trial < 30; ++trial) {
        const Index k = support::uniform_index(rng, 2, 3);
        const Observations data = support::random_tree(rng, 8, k);
        const auto prior = support::random_prior(rng, k);
        const Matrix f = support::random_simplex_rows(rng, data.num_tasks(), k);
        const auto bp = bp_run(data, f, prior, options);
        const auto exact = oracle::enumerate_posterior(data, f, prior);
        CHECK(max_abs_difference(bp.q.matrix(), exact.matrix()) < 1e-8);
    }
}

TEST_CASE("messages stay on the simplex on loopy graphs")
{
    Rng rng {23};
    for (int trial = 0; trial < 10; ++trial) {
        const Index k = support::uniform_index(rng, 2, 3);
        const Observations data = support::random_observations(rng, 40, 15, k, 0.2);
        const auto prior = support::random_prior(rng, k);
        BPOptions options;
        options.max_sweeps = 1;
        std::optional<MessageState> state;
        for (int sweep = 0; sweep < 15; ++sweep) {
            auto result = bp_run(data, support::random_simplex_rows(rng, 40, k), prior, options, std::move(state));
            const auto& m = result.messages;
            CHECK(m.worker_to_task.allFinite());
            CHECK(m.task_to_worker.allFinite());
            for (Eigen::Index e = 0; e < m.worker_to_task.rows(); ++e) {
                CHECK(std::abs(m.worker_to_task.row(e).sum() - 1.0) < 1e-9);
                CHECK(std::abs(m.task_to_worker.row(e).sum() - 1.0) < 1e-9);
                CHECK(m.worker_to_task.row(e).minCoeff() >= 0.0);
            }
            state = std::move(result.messages);
        }
        CHECK(state->sweeps == 15);
    }
}

TEST_CASE("initial messages are uniform")
{
    const Observations data {2, 2, 3, {{0, 0, 1}, {1, 1, 2}}};
    const auto m = MessageState::initial(data, uniform_rows(2, 3));
    CHECK(m.worker_to_task == uniform_rows(2, 3));
}

TEST_CASE("bp is equivariant under class relabelling")
{
    Rng rng {29};
    const std::vector<Label> perm {1, 2, 0};
    for (int trial = 0; trial < 10; ++trial) {
        const Observations data = support::random_observations(rng, 20, 8, 3, 0.25);
        const auto prior = support::random_prior(rng, 3, support::Family::Dirichlet);
        const Matrix f = support::random_simplex_rows(rng, 20, 3);
        BPOptions options;
        options.factor.mode = FactorMode::ExactEnum;
        options.factor.exact_degree_cap = 12;
        const auto base = bp_run(data, f, prior, options);
        const auto moved = bp_run(support::permute_classes(data, perm), support::permute_columns(f, perm),
                                  WorkerPrior::full_dirichlet(support::permute_both(prior.dirichlet_rows(), perm)),
                                  options);
        CHECK(max_abs_difference(support::permute_columns(base.q.matrix(), perm), moved.q.matrix()) < 1e-9);
    }
}

TEST_CASE("bp with damping converges to the same tree marginals")
{
    Rng rng {31};
    BPOptions options;
    options.factor.mode = FactorMode::ExactEnum;
    options.factor.damping = 0.5;
    options.tolerance = 1e-13;
    options.max_sweeps = 500;
    for (int trial = 0; trial < 10; ++trial) {
        const Observations data = support::random_tree(rng, 6, 2);
        const auto prior = support::random_prior(rng, 2);
        const Matrix f = uniform_rows(data.num_tasks(), 2);
        const auto bp = bp_run(data, f, prior, options);
        CHECK(max_abs_difference(bp.q.matrix(), oracle::enumerate_posterior(data, f, prior).matrix()) < 1e-8);
    }
}

TEST_CASE("Monte-Carlo bp is deterministic given the seed")
{
    Rng rng {37};
    const Observations data = support::random_observations(rng, 20, 8, 2, 0.3);
    BPOptions options;
    options.factor.mode = FactorMode::MonteCarlo;
    options.factor.samples = 50;
    options.seed = 4;
    const auto prior = WorkerPrior::two_coin(2, 3.0, 1.0);
    CHECK(bp_run(data, uniform_rows(20, 2), prior, options).q == bp_run(data, uniform_rows(20, 2), prior, options).q);
}
