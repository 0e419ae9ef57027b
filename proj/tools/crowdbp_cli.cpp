// crowdbp: generate crowdsourcing scenarios, infer labels, train classifiers,
// evaluate and sweep experiments.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 run failure(s).

#include <cstdlib>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "crowdbp/em.hpp"
#include "crowdbp/experiment.hpp"
#include "crowdbp/io.hpp"
#include "crowdbp/oracle.hpp"
#include "crowdbp/synthgen.hpp"

namespace {

using namespace crowdbp;
namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_failure = 3;

class RunFailure : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

struct ScenarioFlags
{
    Index tasks = 1000;
    Index workers = 750;
    Index classes = 2;
    Index l = 3;
    Index r = 4;
    std::string true_prior = "one_coin:2,1";
    Index spammers = 0;
    Index feature_dim = 10;
    double separation = 2.0;
    Index test_size = 1000;

    void add(CLI::App* app)
    {
        app->add_option("--tasks", tasks, "Number of tasks N");
        app->add_option("--workers", workers, "Number of workers M");
        app->add_option("--classes", classes, "Number of classes K");
        app->add_option("--l", l, "Workers per task");
        app->add_option("--r", r, "Tasks per worker");
        app->add_option("--true-prior", true_prior, "Generating prior: one_coin:a,b | two_coin:a,b | dirichlet:diag,off");
        app->add_option("--spammers", spammers, "Extreme spammers answering every task uniformly");
        app->add_option("--feature-dim", feature_dim, "Feature dimension d (>= K)");
        app->add_option("--separation", separation, "Class-mean separation s; 0 gives pure-noise features");
        app->add_option("--test-size", test_size, "Held-out tasks for classifier evaluation");
    }

    ScenarioSpec spec(std::uint64_t seed) const
    {
        ScenarioSpec s;
        s.num_tasks = tasks;
        s.num_workers = workers;
        s.num_classes = classes;
        s.workers_per_task = l;
        s.tasks_per_worker = r;
        s.true_prior = WorkerPrior::parse(true_prior, classes);
        s.num_spammers = spammers;
        s.feature_dim = feature_dim;
        s.feature_separation = separation;
        s.num_test = test_size;
        s.seed = seed;
        return s;
    }
};

struct EMFlags
{
    std::string algorithm = "deepbp";
    std::string prior = "one_coin:2,1";
    std::optional<double> clip;
    Index rounds = 50;
    double outer_tol = 1e-4;
    double mf_tol = 1e-6;
    Index mf_iters = 100;
    Index bp_sweeps = 50;
    double bp_tol = 1e-6;
    std::string factor_mode = "auto";
    Index samples = 400;
    Index exact_cap = 10;
    double damping = 0.0;
    bool bp_cold_start = false;
    std::string classifier = "logistic";
    Index hidden = 16;
    double l2 = 1e-4;
    double init_scale = 0.1;
    Index epochs = 50;
    double lr = 0.1;
    bool backtracking = false;
    double trace_lambda = 0.0;
    double trace_init = 2.0;
    Index trace_steps = 20;
    double trace_lr = 0.0;

    void add(CLI::App* app, bool with_algorithm = true)
    {
        if (with_algorithm) app->add_option("--algorithm", algorithm, "mv | mf | bp | deepmf | deepbp | cl | trace");
        app->add_option("--prior", prior, "Model worker prior: one_coin:a,b | two_coin:a,b | dirichlet:diag,off");
        app->add_option("--clip", clip, "Clipping parameter c (default 0.9; 1 for cl/trace)");
        app->add_option("--rounds", rounds, "Maximum outer EM rounds");
        app->add_option("--outer-tol", outer_tol, "Outer convergence threshold on max |dq|");
        app->add_option("--mf-tol", mf_tol, "Mean-field convergence threshold");
        app->add_option("--mf-iters", mf_iters, "Mean-field sweeps per E-step");
        app->add_option("--bp-sweeps", bp_sweeps, "BP sweeps per E-step (T)");
        app->add_option("--bp-tol", bp_tol, "BP message convergence threshold");
        app->add_option("--factor-mode", factor_mode, "auto | exact_enum | onecoin_dp | monte_carlo");
        app->add_option("--samples", samples, "Monte-Carlo samples S");
        app->add_option("--exact-cap", exact_cap, "Largest worker degree evaluated by enumeration");
        app->add_option("--damping", damping, "BP damping in [0, 1)");
        app->add_flag("--bp-cold-start", bp_cold_start, "Restart BP messages every outer round");
        app->add_option("--classifier", classifier, "logistic | mlp1");
        app->add_option("--hidden", hidden, "Hidden units of mlp1");
        app->add_option("--l2", l2, "L2 penalty on classifier parameters");
        app->add_option("--init-scale", init_scale, "Initial weights uniform in [-s, s]");
        app->add_option("--epochs", epochs, "Classifier epochs per M-step");
        app->add_option("--lr", lr, "Classifier learning rate");
        app->add_flag("--backtracking", backtracking, "Halve steps that increase the loss");
        app->add_option("--trace-lambda", trace_lambda, "Trace regularization lambda");
        app->add_option("--trace-init", trace_init, "Trace/CL confusion initialization delta");
        app->add_option("--trace-steps", trace_steps, "Trace gradient steps per M-step");
        app->add_option("--trace-lr", trace_lr, "Trace step size (0 = classifier learning rate)");
    }

    EMConfig config(Index num_classes, std::uint64_t seed) const
    {
        EMConfig c;
        c.algorithm = parse_algorithm(algorithm);
        c.prior = WorkerPrior::parse(prior, num_classes);
        const bool point_estimate = c.algorithm == Algorithm::CL || c.algorithm == Algorithm::Trace;
        c.clip = clip.value_or(point_estimate ? 1.0 : 0.9);
        c.outer_rounds = rounds;
        c.outer_tolerance = outer_tol;
        c.mf.tolerance = mf_tol;
        c.mf.max_iterations = mf_iters;
        c.bp.max_sweeps = bp_sweeps;
        c.bp.tolerance = bp_tol;
        c.bp.factor.mode = parse_factor_mode(factor_mode);
        c.bp.factor.samples = samples;
        c.bp.factor.exact_degree_cap = exact_cap;
        c.bp.factor.damping = damping;
        c.bp_cold_start = bp_cold_start;
        c.classifier.kind = parse_classifier_kind(classifier);
        c.classifier.hidden_units = hidden;
        c.classifier.l2_lambda = l2;
        c.classifier.init_scale = init_scale;
        c.classifier.epochs = epochs;
        c.classifier.learning_rate = lr;
        c.classifier.backtracking = backtracking;
        c.trace_lambda = trace_lambda;
        c.trace_init = trace_init;
        c.trace_steps = trace_steps;
        c.trace_learning_rate = trace_lr;
        c.seed = seed;
        return c;
    }
};

struct DataFlags
{
    std::string labels;
    std::optional<std::string> features;
    std::optional<std::string> truth;
    Index classes = 2;
    std::optional<Index> tasks;
    std::optional<Index> workers;

    void add(CLI::App* app, bool features_required = false)
    {
        app->add_option("--labels", labels, "Labels CSV (task_id,worker_id,label)")->required();
        auto* f = app->add_option("--features", features, "Features CSV (task_id,f0,...)");
        if (features_required) f->required();
        app->add_option("--truth", truth, "Truth CSV (task_id,label)");
        app->add_option("--classes", classes, "Number of classes K");
        app->add_option("--tasks", tasks, "Number of tasks (default: inferred)");
        app->add_option("--workers", workers, "Number of workers (default: inferred)");
    }

    CrowdDataset load() const
    {
        std::optional<fs::path> f, t;
        if (features) f = *features;
        if (truth) t = *truth;
        return io::load_dataset(labels, f, t, {classes, tasks, workers});
    }
};

ordered_json metrics_json(const LabelPosterior& q, const std::optional<std::vector<Label>>& truth,
                          const std::optional<double>& test_accuracy)
{
    ordered_json j;
    j["num_tasks"] = q.num_tasks();
    j["num_classes"] = q.num_classes();
    if (truth) j["denoised_accuracy"] = denoised_accuracy(q, truth);
    if (test_accuracy) j["test_accuracy"] = *test_accuracy;
    std::vector<std::size_t> hist(10, 0);
    for (Index i = 0; i < q.num_tasks(); ++i) ++hist[histogram_bin(q(i, 0))];
    j["marginal_histogram"] = hist;
    return j;
}

void write_or_print(const std::optional<std::string>& path, const std::string& text)
{
    if (path) {
        io::write_file_atomic(*path, text);
    } else {
        std::cout << text;
    }
}

// Inference shared by `infer` and `learn`.
int run_inference(const DataFlags& data_flags, const EMFlags& em_flags, std::optional<std::uint64_t> seed,
                  const std::string& out, const std::optional<std::string>& model_out,
                  const std::optional<std::string>& metrics_out, const std::optional<std::string>& diagnostics_dir)
{
    const CrowdDataset dataset = data_flags.load();
    const EMConfig config = em_flags.config(data_flags.classes, seed.value_or(0));
    if (uses_features(config.algorithm) && !seed) {
        throw UsageError {"--seed is required for " + std::string {to_string(config.algorithm)}};
    }
    RunResult result;
    try {
        result = run_algorithm(dataset.observations, config);
    } catch (const NumericalError& e) {
        throw RunFailure {e.what()};
    }
    io::write_file_atomic(out, io::posterior_csv(result.q));
    if (model_out) {
        if (!result.model) throw UsageError {"algorithm " + em_flags.algorithm + " does not train a classifier"};
        io::write_file_atomic(*model_out, io::model_json(*result.model));
    }
    if (metrics_out) io::write_file_atomic(*metrics_out, metrics_json(result.q, dataset.truth, std::nullopt).dump(2) + '\n');
    if (diagnostics_dir) {
        std::vector<double> acc;
        if (dataset.truth) acc.push_back(denoised_accuracy(result.q, dataset.truth));
        const bool dirichlet = config.algorithm == Algorithm::MF || config.algorithm == Algorithm::DeepMF;
        emit_diagnostics(compute_diagnostics(result.q, result.worker_params, dirichlet, acc), *diagnostics_dir);
    }
    std::cerr << to_string(config.algorithm) << ": " << result.rounds << " rounds, " << result.wall_seconds << " s\n";
    return 0;
}

std::vector<double> parse_grid(const std::string& text)
{
    std::vector<double> grid;
    std::stringstream in {text};
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            grid.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument {item};
        } catch (const std::exception&) {
            throw UsageError {"cannot parse grid value '" + item + "'"};
        }
    }
    if (grid.empty()) throw UsageError {"grid is empty"};
    return grid;
}

std::vector<Algorithm> parse_algorithms(const std::string& text)
{
    std::vector<Algorithm> out;
    std::stringstream in {text};
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(parse_algorithm(item));
    if (out.empty()) throw UsageError {"algorithm list is empty"};
    return out;
}

Index default_threads()
{
    if (const char* env = std::getenv("CROWDBP_THREADS")) {
        try {
            return std::max<Index>(1, std::stoul(env));
        } catch (const std::exception&) {
            throw UsageError {"CROWDBP_THREADS must be a positive integer"};
        }
    }
    return 1;
}

// True when the task/worker graph has no cycle.
bool is_forest(const Observations& data)
{
    std::vector<Index> parent(data.num_tasks() + data.num_workers());
    std::iota(parent.begin(), parent.end(), Index {0});
    const auto find = [&](Index v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    };
    for (const auto& a : data.answers()) {
        const Index x = find(a.task), y = find(data.num_tasks() + a.worker);
        if (x == y) return false;
        parent[x] = y;
    }
    return true;
}

// Expands `--config FILE` into `--key=value` arguments placed before the
// command-line ones, so that explicit flags win.
std::vector<std::string> expand_config(int argc, char** argv)
{
    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t i = 0; i < args.size(); ++i) {
        std::string path;
        std::size_t width = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            width = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            path = args[i].substr(9);
            width = 1;
        } else {
            continue;
        }
        std::vector<std::string> injected;
        for (const auto& [key, value] : io::load_config(path)) injected.push_back("--" + key + "=" + value);
        args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i + width));
        // After the subcommand name, which must come first.
        const std::size_t at = args.empty() ? 0 : 1;
        args.insert(args.begin() + static_cast<std::ptrdiff_t>(std::min(at, args.size())), injected.begin(), injected.end());
        break;
    }
    return args;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app {"crowdbp: label aggregation from noisy crowds with mean-field and belief-propagation EM"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.set_help_all_flag("--help-all");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic scenario");
    ScenarioFlags gen_scenario;
    gen_scenario.add(gen);
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--seed", gen_seed, "Scenario seed")->required();
    gen->add_option("--out", gen_out, "Output directory")->required();

    // infer
    auto* infer = app.add_subcommand("infer", "Infer task labels (any algorithm)");
    DataFlags infer_data;
    EMFlags infer_em;
    infer_em.algorithm = "bp";
    std::optional<std::uint64_t> infer_seed;
    std::string infer_out;
    std::optional<std::string> infer_model, infer_metrics, infer_diag;
    infer_data.add(infer);
    infer_em.add(infer);
    infer->add_option("--seed", infer_seed, "Run seed (required for feature-based algorithms)");
    infer->add_option("--out", infer_out, "Posterior CSV")->required();
    infer->add_option("--model-out", infer_model, "Classifier JSON");
    infer->add_option("--metrics-out", infer_metrics, "Metrics JSON");
    infer->add_option("--diagnostics", infer_diag, "Directory for diagnostics.json");

    // learn
    auto* learn = app.add_subcommand("learn", "Jointly infer labels and train a classifier");
    DataFlags learn_data;
    EMFlags learn_em;
    std::uint64_t learn_seed = 0;
    std::string learn_out, learn_model;
    std::optional<std::string> learn_metrics, learn_diag;
    learn_data.add(learn, true);
    learn_em.add(learn);
    learn->add_option("--seed", learn_seed, "Run seed")->required();
    learn->add_option("--out", learn_out, "Posterior CSV")->required();
    learn->add_option("--model-out", learn_model, "Classifier JSON")->required();
    learn->add_option("--metrics-out", learn_metrics, "Metrics JSON");
    learn->add_option("--diagnostics", learn_diag, "Directory for diagnostics.json");

    // eval
    auto* eval = app.add_subcommand("eval", "Score a posterior (and optionally a classifier)");
    std::string eval_posterior, eval_truth;
    Index eval_classes = 2;
    std::optional<std::string> eval_model, eval_test_features, eval_test_truth, eval_out;
    eval->add_option("--posterior", eval_posterior, "Posterior CSV")->required();
    eval->add_option("--truth", eval_truth, "Truth CSV")->required();
    eval->add_option("--classes", eval_classes, "Number of classes K");
    eval->add_option("--model", eval_model, "Classifier JSON");
    eval->add_option("--test-features", eval_test_features, "Held-out features CSV");
    eval->add_option("--test-truth", eval_test_truth, "Held-out truth CSV");
    eval->add_option("--out", eval_out, "Metrics JSON (default: stdout)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run an experiment grid over seeds and algorithms");
    ScenarioFlags sweep_scenario;
    EMFlags sweep_em;
    std::string sweep_kind = "prior_sweep", sweep_grid, sweep_algos = "mv,mf,bp,deepmf,deepbp", sweep_out;
    std::optional<std::string> sweep_model_prior;
    Index sweep_seeds = 10, sweep_budget = 2000;
    std::optional<Index> sweep_threads;
    bool sweep_full = false;
    std::uint64_t sweep_seed = 0;
    sweep_scenario.add(sweep);
    sweep_em.add(sweep, false);
    sweep->add_option("--kind", sweep_kind,
                      "prior_sweep | spammer_sweep | clip_sweep | budget_sweep | sample_size_sweep | trace_lambda_sweep");
    sweep->add_option("--grid", sweep_grid, "Comma-separated grid values")->required();
    sweep->add_option("--algos", sweep_algos, "Comma-separated algorithms");
    sweep->add_option("--seeds", sweep_seeds, "Seeds per grid point");
    sweep->add_flag("--full", sweep_full, "Use 50 seeds per grid point");
    sweep->add_option("--seed", sweep_seed, "Master seed")->required();
    sweep->add_option("--model-prior", sweep_model_prior, "Prior given to the algorithms (default: the true prior)");
    sweep->add_option("--budget", sweep_budget, "Budget B = N * l for budget_sweep");
    sweep->add_option("--threads", sweep_threads, "Concurrent runs (default: $CROWDBP_THREADS or 1)");
    sweep->add_option("--out", sweep_out, "Output directory")->required();

    // oracle-check
    auto* check = app.add_subcommand("oracle-check", "Compare BP and factor messages against brute-force oracles");
    DataFlags check_data;
    std::string check_prior = "one_coin:2,1";
    double check_tol = 1e-8;
    std::optional<std::string> check_out;
    check_data.add(check);
    check->add_option("--prior", check_prior, "Worker prior");
    check->add_option("--tolerance", check_tol, "Maximum allowed absolute error");
    check->add_option("--out", check_out, "Report JSON (default: stdout)");

    std::vector<std::string> args;
    try {
        args = expand_config(argc, argv);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_data;
    }
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    try {
        if (*gen) {
            const Scenario s = generate_scenario(gen_scenario.spec(gen_seed));
            const fs::path dir {gen_out};
            io::save_dataset(s.dataset, dir);
            io::write_file_atomic(dir / "test_features.csv", io::features_csv(s.test_features));
            io::write_file_atomic(dir / "test_truth.csv", io::truth_csv(s.test_truth));
            return 0;
        }
        if (*infer) {
            return run_inference(infer_data, infer_em, infer_seed, infer_out, infer_model, infer_metrics, infer_diag);
        }
        if (*learn) {
            if (!uses_features(parse_algorithm(learn_em.algorithm))) {
                throw UsageError {"learn needs a feature-based algorithm (deepmf, deepbp, cl, trace)"};
            }
            return run_inference(learn_data, learn_em, learn_seed, learn_out, learn_model, learn_metrics, learn_diag);
        }
        if (*eval) {
            const LabelPosterior q = io::load_posterior(eval_posterior);
            const auto truth = io::load_truth(eval_truth, eval_classes, q.num_tasks());
            std::optional<double> test;
            if (eval_model) {
                if (!eval_test_features || !eval_test_truth) {
                    throw UsageError {"--model needs --test-features and --test-truth"};
                }
                const ClassifierModel model = io::load_model(*eval_model);
                const Matrix x = io::load_features(*eval_test_features);
                const auto y = io::load_truth(*eval_test_truth, eval_classes, static_cast<Index>(x.rows()));
                test = accuracy(argmax_labels(model.predict_proba(x)), y);
            }
            write_or_print(eval_out, metrics_json(q, truth, test).dump(2) + '\n');
            return 0;
        }
        if (*sweep) {
            SweepSpec spec;
            spec.kind = parse_sweep_kind(sweep_kind);
            spec.grid = parse_grid(sweep_grid);
            spec.algorithms = parse_algorithms(sweep_algos);
            spec.num_seeds = sweep_full ? 50 : sweep_seeds;
            spec.master_seed = sweep_seed;
            spec.scenario = sweep_scenario.spec(0);
            spec.config = sweep_em.config(sweep_scenario.classes, 0);
            spec.config.clip = sweep_em.clip.value_or(0.9);
            if (sweep_model_prior) spec.model_prior = WorkerPrior::parse(*sweep_model_prior, sweep_scenario.classes);
            spec.budget = sweep_budget;
            spec.threads = sweep_threads.value_or(default_threads());
            const ExperimentResult result = run_experiment(spec);
            write_experiment(spec, result, sweep_out);
            if (result.failures > 0) {
                std::cerr << result.failures << " run(s) failed; see runs.csv\n";
                return exit_failure;
            }
            return 0;
        }
        if (*check) {
            const CrowdDataset dataset = check_data.load();
            const auto& obs = dataset.observations;
            const WorkerPrior prior = WorkerPrior::parse(check_prior, check_data.classes);
            const Matrix f = Matrix::Constant(static_cast<Eigen::Index>(obs.num_tasks()),
                                              static_cast<Eigen::Index>(obs.num_classes()),
                                              1.0 / static_cast<double>(obs.num_classes()));
            ordered_json report;
            const bool forest = is_forest(obs);
            report["forest"] = forest;
            bool ok = true;

            BPOptions options;
            options.factor.mode = FactorMode::ExactEnum;
            options.factor.exact_degree_cap = 12;
            options.max_sweeps = 2 * (obs.num_tasks() + obs.num_workers()) + 2;
            options.tolerance = 1e-14;
            const BPResult bp = bp_run(obs, f, prior, options);
            const LabelPosterior exact = oracle::enumerate_posterior(obs, f, prior);
            const double bp_error = max_abs_difference(bp.q.matrix(), exact.matrix());
            report["bp_vs_enumeration_max_abs_error"] = bp_error;
            if (forest) ok = ok && bp_error <= check_tol;

            // Factor messages from the final BP iterate against the moment oracle.
            double factor_error = 0.0, dp_error = 0.0;
            for (Index u = 0; u < obs.num_workers(); ++u) {
                const auto edges = obs.graph().worker_edges(u);
                if (edges.empty()) continue;
                std::vector<Label> answers;
                Matrix incoming(static_cast<Eigen::Index>(edges.size()), static_cast<Eigen::Index>(obs.num_classes()));
                for (Index j = 0; j < edges.size(); ++j) {
                    answers.push_back(obs.answer(edges[j]).label);
                    incoming.row(static_cast<Eigen::Index>(j)) = bp.messages.task_to_worker.row(static_cast<Eigen::Index>(edges[j]));
                }
                const Matrix exact_msgs = factor_messages_exact(prior, answers, incoming, 12);
                for (Index t = 0; t < edges.size(); ++t) {
                    const auto row = static_cast<Eigen::Index>(t);
                    factor_error = std::max(factor_error, (exact_msgs.row(row) - oracle::moment_factor_message(prior, answers, incoming, t)).cwiseAbs().maxCoeff());
                    if (prior.family() == PriorFamily::OneCoin) {
                        dp_error = std::max(dp_error, (exact_msgs.row(row) - factor_message_onecoin_dp(prior, answers, incoming, t)).cwiseAbs().maxCoeff());
                    }
                }
            }
            report["factor_exact_vs_moment_max_abs_error"] = factor_error;
            if (prior.family() == PriorFamily::OneCoin) report["factor_dp_vs_exact_max_abs_error"] = dp_error;
            ok = ok && factor_error <= 1e-10 && dp_error <= 1e-12;
            report["tolerance"] = check_tol;
            report["pass"] = ok;
            write_or_print(check_out, report.dump(2) + '\n');
            return ok ? 0 : exit_failure;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return exit_usage;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return exit_data;
    } catch (const RunFailure& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return exit_failure;
    } catch (const NumericalError& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return exit_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_failure;
    }
    return 0;
}
