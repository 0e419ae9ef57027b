#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "crowdbp/em.hpp"
#include "crowdbp/synthgen.hpp"

namespace crowdbp {

enum class SweepKind { PriorSweep, SpammerSweep, ClipSweep, BudgetSweep, SampleSizeSweep, TraceLambdaSweep };

SweepKind parse_sweep_kind(std::string_view text);
const char* to_string(SweepKind kind);

/**
 * One experiment grid. The grid value x means, per kind:
 *   prior_sweep         alpha_1 of the true one-coin prior Dir(alpha_1, alpha_1 / 2)
 *   spammer_sweep       number of injected extreme spammers
 *   clip_sweep          clipping parameter c
 *   budget_sweep        workers per task l, with N = round(B / l)
 *   sample_size_sweep   Monte-Carlo sample count S (BP runs in monte_carlo mode)
 *   trace_lambda_sweep  Trace regularization lambda
 */
struct SweepSpec
{
    SweepKind kind = SweepKind::PriorSweep;
    std::vector<double> grid;
    std::vector<Algorithm> algorithms;
    Index num_seeds = 10;
    std::uint64_t master_seed = 0;
    ScenarioSpec scenario;
    EMConfig config;
    /// Prior handed to the algorithms; the true prior when absent.
    std::optional<WorkerPrior> model_prior;
    Index budget = 2000;
    Index threads = 1;
};

struct RunRecord
{
    double x = 0.0;
    Algorithm algorithm = Algorithm::MV;
    Index seed_index = 0;
    double denoised = 0.0;
    std::optional<double> test;
    std::optional<std::string> error;
};

struct PointSummary
{
    double x = 0.0;
    Algorithm algorithm = Algorithm::MV;
    double mean = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    Index count = 0;
};

struct ExperimentResult
{
    std::vector<RunRecord> runs;
    std::vector<PointSummary> denoised;
    std::vector<PointSummary> test;
    Index failures = 0;
};

/// Mean and 99% normal-approximation interval (z = 2.5758293035489) of `values`.
PointSummary summarize(std::span<const double> values);

/// Scenario and EM configuration of one (grid point, seed) cell.
ScenarioSpec scenario_for(const SweepSpec& spec, double x, Index seed_index);
EMConfig config_for(const SweepSpec& spec, double x, Algorithm algorithm, Index seed_index);

/// Runs every grid point x algorithm x seed. Failures are recorded per run
/// and do not stop the sweep.
ExperimentResult run_experiment(const SweepSpec& spec);

/// Writes denoised.csv, test.csv (columns x,algo,mean,ci_lo,ci_hi),
/// runs.csv and summary.json into `directory`.
void write_experiment(const SweepSpec& spec, const ExperimentResult& result, const std::filesystem::path& directory);

/// Overconfidence diagnostics of one or more runs.
struct Diagnostics
{
    std::vector<std::size_t> marginal_histogram;   // 10 bins of q(z = 0)
    std::vector<double> sorted_accuracies;         // ascending
    std::vector<std::size_t> diagonal_histogram;   // 10 bins of posterior-mean diagonals
};

/// Bin index of v in [0, 1] among `bins` equal bins; 1.0 lands in the last bin.
std::size_t histogram_bin(double value, std::size_t bins = 10);

Diagnostics compute_diagnostics(const LabelPosterior& q, std::span<const Matrix> worker_params,
                                bool worker_params_are_dirichlet, std::span<const double> per_seed_accuracies);

/// Writes diagnostics.json (fixed key order) into `directory`.
void emit_diagnostics(const Diagnostics& diagnostics, const std::filesystem::path& directory);

} // namespace crowdbp
