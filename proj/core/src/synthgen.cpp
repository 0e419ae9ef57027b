#include "crowdbp/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <unordered_map>

#include "crowdbp/rng.hpp"

namespace crowdbp {

namespace {

constexpr Index max_rejections = 10000;

std::uint64_t pair_key(Index task, Index worker)
{
    return (static_cast<std::uint64_t>(task) << 32) | static_cast<std::uint64_t>(worker);
}

Index uniform_index(Rng& rng, Index n)
{
    return static_cast<Index>(std::uniform_int_distribution<std::uint64_t> {0, n - 1}(rng));
}

Label categorical(Rng& rng, const Eigen::Ref<const Eigen::RowVectorXd>& probs)
{
    const double u = sample_uniform(rng) * probs.sum();
    double acc = 0.0;
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        acc += probs(k);
        if (u < acc) return static_cast<Label>(k);
    }
    return static_cast<Label>(probs.size() - 1);
}

} // namespace

std::vector<Answer> gen_bipartite(Index num_tasks, Index workers_per_task, Index num_workers,
                                  Index tasks_per_worker, std::uint64_t seed)
{
    if (num_tasks == 0 || num_workers == 0 || workers_per_task == 0 || tasks_per_worker == 0) {
        throw UsageError {"graph sizes and degrees must be positive"};
    }
    if (num_tasks * workers_per_task != num_workers * tasks_per_worker) {
        throw UsageError {"infeasible degrees: N*l = " + std::to_string(num_tasks * workers_per_task) +
                          " but M*r = " + std::to_string(num_workers * tasks_per_worker)};
    }
    if (workers_per_task > num_workers || tasks_per_worker > num_tasks) {
        throw UsageError {"degrees exceed the other side of the bipartite graph"};
    }
    Rng rng {seed};
    const Index num_edges = num_tasks * workers_per_task;
    std::vector<Index> tasks(num_edges), workers(num_edges);
    for (Index e = 0; e < num_edges; ++e) {
        tasks[e] = e / workers_per_task;
        workers[e] = e / tasks_per_worker;
    }
    std::shuffle(workers.begin(), workers.end(), rng);

    std::unordered_map<std::uint64_t, Index> multiplicity;
    multiplicity.reserve(num_edges * 2);
    for (Index e = 0; e < num_edges; ++e) ++multiplicity[pair_key(tasks[e], workers[e])];

    Index rejections = 0;
    for (Index e = 0; e < num_edges; ++e) {
        while (multiplicity[pair_key(tasks[e], workers[e])] > 1) {
            const Index other = uniform_index(rng, num_edges);
            const auto a = pair_key(tasks[e], workers[other]);
            const auto b = pair_key(tasks[other], workers[e]);
            const bool ok = tasks[e] != tasks[other] && workers[e] != workers[other] &&
                            multiplicity[a] == 0 && multiplicity[b] == 0;
            if (!ok) {
                if (++rejections > max_rejections) {
                    throw UsageError {"could not sample a simple (l, r)-regular graph within " +
                                      std::to_string(max_rejections) + " rejections"};
                }
                continue;
            }
            --multiplicity[pair_key(tasks[e], workers[e])];
            --multiplicity[pair_key(tasks[other], workers[other])];
            std::swap(workers[e], workers[other]);
            ++multiplicity[a];
            ++multiplicity[b];
        }
    }

    std::vector<Answer> edges(num_edges);
    for (Index e = 0; e < num_edges; ++e) edges[e] = {tasks[e], workers[e], 0};
    std::sort(edges.begin(), edges.end(), [](const Answer& x, const Answer& y) {
        return x.task != y.task ? x.task < y.task : x.worker < y.worker;
    });
    return edges;
}

std::vector<Label> sample_truth(Index num_tasks, Index num_classes, std::uint64_t seed)
{
    Rng rng {seed};
    std::vector<Label> truth(num_tasks);
    for (auto& z : truth) z = static_cast<Label>(uniform_index(rng, num_classes));
    return truth;
}

std::vector<Answer> sample_answers(std::vector<Answer> edges, std::span<const Label> truth, Index num_workers,
                                   const WorkerPrior& prior, std::uint64_t seed,
                                   std::vector<ConfusionMatrix>* confusions)
{
    std::vector<ConfusionMatrix> thetas(num_workers);
    for (Index u = 0; u < num_workers; ++u) thetas[u] = sample_confusion(prior, derive_seed(seed, {0, u}));
    Rng rng {derive_seed(seed, {1})};
    for (auto& a : edges) {
        if (a.task >= truth.size() || a.worker >= num_workers) throw UsageError {"edge out of range"};
        a.label = categorical(rng, thetas[a.worker].row(truth[a.task]));
    }
    if (confusions) *confusions = std::move(thetas);
    return edges;
}

CrowdDataset inject_spammers(const CrowdDataset& dataset, Index count, std::uint64_t seed)
{
    if (count == 0) return dataset;
    const auto& obs = dataset.observations;
    std::vector<Answer> answers = obs.answers();
    answers.reserve(answers.size() + count * obs.num_tasks());
    Rng rng {seed};
    for (Index s = 0; s < count; ++s) {
        const Index worker = obs.num_workers() + s;
        for (Index i = 0; i < obs.num_tasks(); ++i) {
            answers.push_back({i, worker, static_cast<Label>(uniform_index(rng, obs.num_classes()))});
        }
    }
    std::optional<Matrix> features;
    if (obs.has_features()) features = obs.features();
    return {Observations {obs.num_tasks(), obs.num_workers() + count, obs.num_classes(), std::move(answers),
                          std::move(features)},
            dataset.truth};
}

Matrix gen_features(std::span<const Label> truth, Index num_classes, Index dim, double separation,
                    std::uint64_t seed)
{
    if (dim < num_classes) throw UsageError {"feature dimension must be at least K"};
    if (!(separation >= 0.0)) throw UsageError {"feature separation must be nonnegative"};
    Rng rng {seed};
    std::normal_distribution<double> noise {0.0, 1.0};
    Matrix x(static_cast<Eigen::Index>(truth.size()), static_cast<Eigen::Index>(dim));
    for (Index i = 0; i < truth.size(); ++i) {
        for (Index j = 0; j < dim; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = noise(rng);
        x(static_cast<Eigen::Index>(i), truth[i]) += separation;
    }
    return x;
}

Scenario generate_scenario(const ScenarioSpec& spec)
{
    if (!spec.true_prior) throw UsageError {"scenario needs a true worker prior"};
    if (spec.true_prior->num_classes() != spec.num_classes) throw UsageError {"prior K differs from scenario K"};
    const std::uint64_t s = spec.seed;
    Scenario out;
    std::vector<Label> truth = sample_truth(spec.num_tasks, spec.num_classes, derive_seed(s, {10}));
    auto edges = gen_bipartite(spec.num_tasks, spec.workers_per_task, spec.num_workers, spec.tasks_per_worker,
                               derive_seed(s, {11}));
    auto answers = sample_answers(std::move(edges), truth, spec.num_workers, *spec.true_prior, derive_seed(s, {12}),
                                  &out.worker_confusions);
    Matrix features = gen_features(truth, spec.num_classes, spec.feature_dim, spec.feature_separation,
                                   derive_seed(s, {14}));
    CrowdDataset base {Observations {spec.num_tasks, spec.num_workers, spec.num_classes, std::move(answers),
                                     std::move(features)},
                       std::move(truth)};
    out.dataset = inject_spammers(base, spec.num_spammers, derive_seed(s, {13}));
    out.test_truth = sample_truth(spec.num_test, spec.num_classes, derive_seed(s, {15}));
    out.test_features = gen_features(out.test_truth, spec.num_classes, spec.feature_dim, spec.feature_separation,
                                     derive_seed(s, {16}));
    return out;
}

} // namespace crowdbp
