#include "doctest.h"

#include "support.hpp"

using namespace crowdbp;

namespace {

Matrix rows(std::initializer_list<std::initializer_list<double>> values)
{
    Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(values.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : values) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

} // namespace

TEST_CASE("argmax picks the largest entry")
{
    CHECK(argmax_labels(rows({{0.7, 0.3}})) == std::vector<Label> {0});
    CHECK(argmax_labels(rows({{0.2, 0.8}, {0.9, 0.1}})) == std::vector<Label> {1, 0});
}

TEST_CASE("argmax ties go to the lowest class")
{
    CHECK(argmax_labels(rows({{0.5, 0.5}})) == std::vector<Label> {0});
    CHECK(argmax_labels(rows({{0.25, 0.375, 0.375}})) == std::vector<Label> {1});
}

TEST_CASE("denoised accuracy")
{
    const LabelPosterior perfect {rows({{1, 0}, {0, 1}, {0, 1}})};
    CHECK(denoised_accuracy(perfect, std::vector<Label> {0, 1, 1}) == 1.0);

    const auto uniform = LabelPosterior::uniform(4, 2);
    CHECK(denoised_accuracy(uniform, std::vector<Label> {0, 0, 0, 0}) == 1.0);

    const LabelPosterior q {rows({{0.9, 0.1}, {0.2, 0.8}, {0.4, 0.6}, {0.6, 0.4}})};
    CHECK(denoised_accuracy(q, std::vector<Label> {0, 1, 0, 0}) == doctest::Approx(0.75));

    CHECK_THROWS_AS(denoised_accuracy(q, std::nullopt), UsageError);
}

TEST_CASE("label posterior validates rows")
{
    CHECK_THROWS(LabelPosterior {rows({{0.6, 0.6}})});
    CHECK_THROWS(LabelPosterior {rows({{1.2, -0.2}})});
    CHECK_NOTHROW(LabelPosterior {rows({{0.25, 0.75}})});
}

TEST_CASE("observations reject bad answers")
{
    CHECK_THROWS_AS(Observations(2, 2, 2, {{0, 0, 2}}), DataError);
    CHECK_THROWS_AS(Observations(2, 2, 2, {{2, 0, 0}}), DataError);
    CHECK_THROWS_AS(Observations(2, 2, 2, {{0, 5, 0}}), DataError);
    try {
        Observations(3, 3, 2, {{0, 0, 0}, {1, 1, 1}, {0, 0, 1}});
        FAIL("duplicate accepted");
    } catch (const DataError& e) {
        const std::string what = e.what();
        CHECK(what.find('0') != std::string::npos);
        CHECK(what.find('2') != std::string::npos);
    }
    CHECK_THROWS_AS(Observations(2, 1, 2, {}, Matrix::Zero(3, 2)), DataError);
}

TEST_CASE("assignment graph transpose consistency")
{
    Rng rng {11};
    for (int trial = 0; trial < 50; ++trial) {
        const Index n = support::uniform_index(rng, 1, 30);
        const Index m = support::uniform_index(rng, 1, 20);
        const Observations data = support::random_observations(rng, n, m, 3, support::uniform(rng, 0.0, 0.6));
        const auto& g = data.graph();
        std::vector<int> seen_task(data.num_answers(), 0), seen_worker(data.num_answers(), 0);
        Index total = 0;
        for (Index i = 0; i < n; ++i) {
            for (Index e : g.task_edges(i)) {
                CHECK(data.answer(e).task == i);
                ++seen_task[e];
            }
            total += g.task_degree(i);
        }
        for (Index u = 0; u < m; ++u) {
            for (Index e : g.worker_edges(u)) {
                CHECK(data.answer(e).worker == u);
                ++seen_worker[e];
            }
        }
        CHECK(total == data.num_answers());
        for (Index e = 0; e < data.num_answers(); ++e) {
            CHECK(seen_task[e] == 1);
            CHECK(seen_worker[e] == 1);
        }
    }
}
