#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "crowdbp/dataset.hpp"
#include "crowdbp/priors.hpp"

namespace crowdbp {

struct ScenarioSpec
{
    Index num_tasks = 1000;
    Index num_workers = 750;
    Index num_classes = 2;
    Index workers_per_task = 3;   // l
    Index tasks_per_worker = 4;   // r
    std::optional<WorkerPrior> true_prior;
    Index num_spammers = 0;
    Index feature_dim = 10;
    double feature_separation = 2.0;
    /// Held-out tasks (features + truth only) for classifier evaluation.
    Index num_test = 1000;
    std::uint64_t seed = 0;
};

struct Scenario
{
    CrowdDataset dataset;   // answers, features and truth of the crowdsourced tasks
    Matrix test_features;
    std::vector<Label> test_truth;
    std::vector<ConfusionMatrix> worker_confusions;  // the drawn theta^(u), spammers excluded
};

/// (l, r)-regular bipartite assignment by the configuration model: l stubs
/// per task are matched against a shuffle of r stubs per worker, and edges
/// that repeat a (task, worker) pair are re-matched by random stub swaps.
/// Returns answer triples with label 0 placeholders, sorted by task.
std::vector<Answer> gen_bipartite(Index num_tasks, Index workers_per_task, Index num_workers,
                                  Index tasks_per_worker, std::uint64_t seed);

std::vector<Label> sample_truth(Index num_tasks, Index num_classes, std::uint64_t seed);

/// Draws theta^(u) per worker, then y ~ Categorical(theta^(u)[truth_i]) per edge.
/// `confusions`, when given, receives the drawn matrices.
std::vector<Answer> sample_answers(std::vector<Answer> edges, std::span<const Label> truth, Index num_workers,
                                   const WorkerPrior& prior, std::uint64_t seed,
                                   std::vector<ConfusionMatrix>* confusions = nullptr);

/// Appends `count` workers that answer every task uniformly at random.
CrowdDataset inject_spammers(const CrowdDataset& dataset, Index count, std::uint64_t seed);

/// Spherical unit-variance Gaussian blobs centred at separation * e_k.
/// separation == 0 makes features independent of the class.
Matrix gen_features(std::span<const Label> truth, Index num_classes, Index dim, double separation,
                    std::uint64_t seed);

Scenario generate_scenario(const ScenarioSpec& spec);

} // namespace crowdbp
