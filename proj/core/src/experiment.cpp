#include "crowdbp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "crowdbp/io.hpp"
#include "crowdbp/rng.hpp"
#include "json.hpp"

namespace crowdbp {

namespace {

constexpr double z_99 = 2.5758293035489004;

using ordered_json = nlohmann::ordered_json;

std::string points_csv(const std::vector<PointSummary>& points)
{
    std::string out = "x,algo,mean,ci_lo,ci_hi\n";
    for (const auto& p : points) {
        out += io::format_real(p.x) + ',' + to_string(p.algorithm) + ',' + io::format_real(p.mean) + ',' +
               io::format_real(p.ci_lo) + ',' + io::format_real(p.ci_hi) + '\n';
    }
    return out;
}

ordered_json points_json(const std::vector<PointSummary>& points)
{
    auto arr = ordered_json::array();
    for (const auto& p : points) {
        ordered_json j;
        j["x"] = p.x;
        j["algo"] = to_string(p.algorithm);
        j["mean"] = p.mean;
        j["ci_lo"] = p.ci_lo;
        j["ci_hi"] = p.ci_hi;
        j["count"] = p.count;
        arr.push_back(std::move(j));
    }
    return arr;
}

} // namespace

SweepKind parse_sweep_kind(std::string_view text)
{
    if (text == "prior_sweep") return SweepKind::PriorSweep;
    if (text == "spammer_sweep") return SweepKind::SpammerSweep;
    if (text == "clip_sweep") return SweepKind::ClipSweep;
    if (text == "budget_sweep") return SweepKind::BudgetSweep;
    if (text == "sample_size_sweep") return SweepKind::SampleSizeSweep;
    if (text == "trace_lambda_sweep") return SweepKind::TraceLambdaSweep;
    throw UsageError {"unknown sweep kind '" + std::string {text} + "'"};
}

const char* to_string(SweepKind kind)
{
    switch (kind) {
    case SweepKind::PriorSweep: return "prior_sweep";
    case SweepKind::SpammerSweep: return "spammer_sweep";
    case SweepKind::ClipSweep: return "clip_sweep";
    case SweepKind::BudgetSweep: return "budget_sweep";
    case SweepKind::SampleSizeSweep: return "sample_size_sweep";
    case SweepKind::TraceLambdaSweep: return "trace_lambda_sweep";
    }
    return "?";
}

PointSummary summarize(std::span<const double> values)
{
    PointSummary s;
    s.count = values.size();
    if (values.empty()) return s;
    double total = 0.0;
    for (double v : values) total += v;
    s.mean = total / static_cast<double>(values.size());
    double half = 0.0;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        half = z_99 * sd / std::sqrt(static_cast<double>(values.size()));
    }
    s.ci_lo = s.mean - half;
    s.ci_hi = s.mean + half;
    return s;
}

ScenarioSpec scenario_for(const SweepSpec& spec, double x, Index seed_index)
{
    ScenarioSpec s = spec.scenario;
    s.seed = derive_seed(spec.master_seed, {seed_index});
    switch (spec.kind) {
    case SweepKind::PriorSweep: s.true_prior = WorkerPrior::one_coin(s.num_classes, x, x / 2.0); break;
    case SweepKind::SpammerSweep: s.num_spammers = static_cast<Index>(std::llround(x)); break;
    case SweepKind::BudgetSweep: {
        const auto l = static_cast<Index>(std::llround(x));
        const Index r = s.tasks_per_worker;
        if (l == 0 || r == 0) throw UsageError {"budget sweep needs l >= 1 and r >= 1"};
        const auto target = static_cast<Index>(std::llround(static_cast<double>(spec.budget) / static_cast<double>(l)));
        // Nearest N to round(B / l) with N * l divisible by r (ties to the smaller N).
        Index n = 0;
        for (Index d = 0; d <= r && n == 0; ++d) {
            if (target >= d && target - d > 0 && ((target - d) * l) % r == 0) n = target - d;
            else if (((target + d) * l) % r == 0) n = target + d;
        }
        s.num_tasks = n;
        s.workers_per_task = l;
        s.num_workers = n * l / r;
        break;
    }
    default: break;
    }
    return s;
}

EMConfig config_for(const SweepSpec& spec, double x, Algorithm algorithm, Index seed_index)
{
    EMConfig c = spec.config;
    c.algorithm = algorithm;
    c.seed = derive_seed(spec.master_seed, {seed_index, 99});
    if (spec.model_prior) {
        c.prior = spec.model_prior;
    } else {
        c.prior = scenario_for(spec, x, seed_index).true_prior;
    }
    if (algorithm == Algorithm::CL || algorithm == Algorithm::Trace) c.clip = 1.0;
    switch (spec.kind) {
    case SweepKind::ClipSweep: c.clip = x; break;
    case SweepKind::SampleSizeSweep:
        c.bp.factor.mode = FactorMode::MonteCarlo;
        c.bp.factor.samples = static_cast<Index>(std::llround(x));
        break;
    case SweepKind::TraceLambdaSweep: c.trace_lambda = x; break;
    default: break;
    }
    return c;
}

ExperimentResult run_experiment(const SweepSpec& spec)
{
    if (spec.grid.empty() || spec.num_seeds == 0 || spec.algorithms.empty()) {
        throw UsageError {"sweep needs a non-empty grid, algorithm list and seed count"};
    }
    const Index points = spec.grid.size();
    const Index algos = spec.algorithms.size();
    const Index cells = points * spec.num_seeds;

    ExperimentResult result;
    result.runs.resize(cells * algos);
    std::atomic<Index> next {0};
    const auto worker = [&] {
        for (Index cell = next++; cell < cells; cell = next++) {
            const Index g = cell / spec.num_seeds;
            const Index s = cell % spec.num_seeds;
            const double x = spec.grid[g];
            std::optional<Scenario> scenario;
            std::optional<std::string> scenario_error;
            try {
                scenario = generate_scenario(scenario_for(spec, x, s));
            } catch (const std::exception& e) {
                scenario_error = e.what();
            }
            for (Index a = 0; a < algos; ++a) {
                RunRecord& rec = result.runs[(g * algos + a) * spec.num_seeds + s];
                rec.x = x;
                rec.algorithm = spec.algorithms[a];
                rec.seed_index = s;
                if (scenario_error) {
                    rec.error = scenario_error;
                    continue;
                }
                try {
                    const RunResult run = run_algorithm(scenario->dataset.observations, config_for(spec, x, rec.algorithm, s));
                    rec.denoised = denoised_accuracy(run.q, scenario->dataset.truth);
                    if (run.model) {
                        rec.test = accuracy(argmax_labels(run.model->predict_proba(scenario->test_features)),
                                            scenario->test_truth);
                    }
                } catch (const std::exception& e) {
                    rec.error = e.what();
                }
            }
        }
    };
    const Index threads = std::clamp<Index>(spec.threads, 1, cells);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (Index t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (Index g = 0; g < points; ++g) {
        for (Index a = 0; a < algos; ++a) {
            std::vector<double> denoised, test;
            for (Index s = 0; s < spec.num_seeds; ++s) {
                const auto& rec = result.runs[(g * algos + a) * spec.num_seeds + s];
                if (rec.error) {
                    ++result.failures;
                    continue;
                }
                denoised.push_back(rec.denoised);
                if (rec.test) test.push_back(*rec.test);
            }
            auto d = summarize(denoised);
            d.x = spec.grid[g];
            d.algorithm = spec.algorithms[a];
            result.denoised.push_back(d);
            if (!test.empty()) {
                auto t = summarize(test);
                t.x = spec.grid[g];
                t.algorithm = spec.algorithms[a];
                result.test.push_back(t);
            }
        }
    }
    return result;
}

void write_experiment(const SweepSpec& spec, const ExperimentResult& result, const std::filesystem::path& directory)
{
    io::write_file_atomic(directory / "denoised.csv", points_csv(result.denoised));
    io::write_file_atomic(directory / "test.csv", points_csv(result.test));

    std::string runs = "x,algo,seed,denoised,test,error\n";
    for (const auto& r : result.runs) {
        runs += io::format_real(r.x) + ',' + to_string(r.algorithm) + ',' + std::to_string(r.seed_index) + ',' +
                (r.error ? std::string {} : io::format_real(r.denoised)) + ',' +
                (r.test ? io::format_real(*r.test) : std::string {}) + ',';
        if (r.error) {
            std::string msg = *r.error;
            std::replace(msg.begin(), msg.end(), ',', ';');
            std::replace(msg.begin(), msg.end(), '\n', ' ');
            runs += msg;
        }
        runs += '\n';
    }
    io::write_file_atomic(directory / "runs.csv", runs);

    ordered_json j;
    j["kind"] = to_string(spec.kind);
    j["grid"] = spec.grid;
    auto algos = ordered_json::array();
    for (auto a : spec.algorithms) algos.push_back(to_string(a));
    j["algorithms"] = algos;
    j["num_seeds"] = spec.num_seeds;
    j["master_seed"] = spec.master_seed;
    j["seed_split"] = "scenario seed = derive_seed(master, {seed_index}); run seed = derive_seed(master, {seed_index, 99})";
    j["ci_method"] = "normal approximation, 99% (z = 2.5758), sample standard deviation";
    ordered_json scen;
    scen["num_tasks"] = spec.scenario.num_tasks;
    scen["num_workers"] = spec.scenario.num_workers;
    scen["num_classes"] = spec.scenario.num_classes;
    scen["workers_per_task"] = spec.scenario.workers_per_task;
    scen["tasks_per_worker"] = spec.scenario.tasks_per_worker;
    scen["true_prior"] = spec.scenario.true_prior ? spec.scenario.true_prior->to_string() : std::string {"per grid point"};
    scen["num_spammers"] = spec.scenario.num_spammers;
    scen["feature_dim"] = spec.scenario.feature_dim;
    scen["feature_separation"] = spec.scenario.feature_separation;
    scen["num_test"] = spec.scenario.num_test;
    scen["budget"] = spec.budget;
    j["scenario"] = scen;
    j["model_prior"] = spec.model_prior ? spec.model_prior->to_string() : std::string {"true prior"};
    j["failures"] = result.failures;
    j["denoised"] = points_json(result.denoised);
    j["test"] = points_json(result.test);
    io::write_file_atomic(directory / "summary.json", j.dump(2) + '\n');
}

std::size_t histogram_bin(double value, std::size_t bins)
{
    const double clamped = std::clamp(value, 0.0, 1.0);
    return std::min(bins - 1, static_cast<std::size_t>(clamped * static_cast<double>(bins)));
}

Diagnostics compute_diagnostics(const LabelPosterior& q, std::span<const Matrix> worker_params,
                                bool worker_params_are_dirichlet, std::span<const double> per_seed_accuracies)
{
    Diagnostics d;
    d.marginal_histogram.assign(10, 0);
    for (Index i = 0; i < q.num_tasks(); ++i) ++d.marginal_histogram[histogram_bin(q(i, 0))];
    d.sorted_accuracies.assign(per_seed_accuracies.begin(), per_seed_accuracies.end());
    std::sort(d.sorted_accuracies.begin(), d.sorted_accuracies.end());
    d.diagonal_histogram.assign(10, 0);
    for (const auto& p : worker_params) {
        const Vector diag = worker_params_are_dirichlet ? posterior_mean_diagonal(p) : Vector {p.diagonal()};
        for (Eigen::Index k = 0; k < diag.size(); ++k) ++d.diagonal_histogram[histogram_bin(diag(k))];
    }
    return d;
}

void emit_diagnostics(const Diagnostics& diagnostics, const std::filesystem::path& directory)
{
    ordered_json j;
    j["marginal_histogram"] = diagnostics.marginal_histogram;
    j["sorted_accuracies"] = diagnostics.sorted_accuracies;
    j["diagonal_histogram"] = diagnostics.diagonal_histogram;
    io::write_file_atomic(directory / "diagnostics.json", j.dump(2) + '\n');
}

} // namespace crowdbp
