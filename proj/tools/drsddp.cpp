// drsddp: command-line front end for the distributionally robust SDDP solver.
//
//   drsddp solve  one risk-averse (or --risk-neutral) run, writes records.csv,
//                 policy.json and summary.json
//   drsddp study  gap table over distributions and sample sizes
//   drsddp trace  per-iteration bounds for one (distribution, N)
//   drsddp eval   simulate a saved policy on fresh inflow draws
//
// Outputs go to --out, else $DRSDDP_OUT_DIR, else ./out.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "drsddp/error.hpp"
#include "drsddp/experiment.hpp"

using namespace drsddp;

namespace {

struct CommonOptions {
    std::string config;
    std::string out;
    std::size_t scenarios = 12;
    std::size_t horizon = 12;
    bool full = false;
    double epsilon = 0.05;
    std::size_t max_iterations = 300;
    std::size_t paths = 6;
    double alpha = 0.05;
    std::uint64_t seed = 7;
    bool no_timing = false;
};

void add_common(CLI::App* app, CommonOptions& o) {
    app->add_option("--config", o.config, "Hydro system in TOML (default: built-in single reservoir)")->check(CLI::ExistingFile);
    app->add_option("--out", o.out, "Output directory (default $DRSDDP_OUT_DIR or ./out)");
    app->add_option("--scenarios,-S", o.scenarios, "Scenarios per stage")->check(CLI::PositiveNumber);
    app->add_option("--stages,-T", o.horizon, "Horizon of the built-in system")->check(CLI::Range(2, 10000));
    app->add_flag("--full", o.full, "52-week horizon for the built-in system");
    app->add_option("--epsilon", o.epsilon, "Relative optimality gap")->check(CLI::Range(0.0, 1.0));
    app->add_option("--max-iters,-K", o.max_iterations, "Iteration limit");
    app->add_option("--paths,-M", o.paths, "Forward paths per iteration")->check(CLI::Range(2, 100000));
    app->add_option("--alpha", o.alpha, "Confidence level for radius and stopping test")->check(CLI::Range(0.0, 1.0));
    app->add_option("--seed", o.seed, "Master seed");
    app->add_flag("--no-timing", o.no_timing, "Write 0 in seconds columns (byte-identical reruns)");
}

std::filesystem::path output_dir(const CommonOptions& o) {
    if (!o.out.empty()) return o.out;
    if (const char* env = std::getenv("DRSDDP_OUT_DIR"); env && *env) return env;
    return "out";
}

ExperimentSpec make_spec(const CommonOptions& o) {
    ExperimentSpec spec;
    spec.scenarios = o.scenarios;
    spec.horizon = o.full ? 52 : o.horizon;
    spec.epsilon = o.epsilon;
    spec.max_iterations = o.max_iterations;
    spec.paths = o.paths;
    spec.alpha = o.alpha;
    spec.seed = o.seed;
    spec.output_dir = output_dir(o);
    spec.deterministic_output = o.no_timing;
    if (!o.config.empty()) spec.hydro = read_hydro_config(o.config);
    spec.validate();
    return spec;
}

std::vector<std::size_t> parse_counts(const std::string& text) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(item, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (item.empty() || pos != item.size() || v == 0) {
            throw Error(ErrorCode::InvalidParameters, "experiment_cli", "bad sample size '" + item + "'");
        }
        out.push_back(v);
    }
    return out;
}

std::vector<DistributionKind> parse_kinds(const std::string& text) {
    std::vector<DistributionKind> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_distribution_kind(item));
    return out;
}

nlohmann::json run_summary(const RunResult& r, const ExperimentSpec& spec) {
    nlohmann::json j;
    j["steps"] = r.steps;
    j["converged"] = r.converged;
    j["lower_bound"] = r.first_stage.lower_bound;
    if (!r.history.empty()) {
        j["upper_bound"] = r.history.back().upper;
        j["gap"] = r.history.back().gap;
        j["seconds"] = spec.deterministic_output ? 0.0 : r.history.back().seconds;
    }
    j["first_stage"] = {{"x", r.first_stage.x}, {"u", r.first_stage.u}};
    j["epsilon"] = spec.epsilon;
    j["max_iterations"] = spec.max_iterations;
    j["paths"] = spec.paths;
    j["z_half_alpha"] = spec.z_half_alpha();
    j["seed"] = spec.seed;
    j["lower_bound_note"] = "terminal lower bound of the risk-averse problem";
    return j;
}

int cmd_solve(const CommonOptions& o, const std::string& dist_name, std::size_t N, const std::string& samples_csv,
              bool risk_neutral) {
    const ExperimentSpec spec = make_spec(o);
    const TrueDistribution dist = TrueDistribution::with_mean(parse_distribution_kind(dist_name), spec.mean_inflow);
    const Lattice lattice = samples_csv.empty() ? study_lattice(spec, dist, N)
                                                : lattice_from_table(read_sample_csv(samples_csv), spec.scenarios);
    const CellResult cell = solve_cell(spec, dist, lattice, risk_neutral);
    write_file_atomic(spec.output_dir / "records.csv", run_records_csv(cell.run.history, spec.deterministic_output));
    write_policy(spec.output_dir / "policy.json", cell.run.policy.document(cell.problem));
    nlohmann::json summary = run_summary(cell.run, spec);
    summary["distribution"] = samples_csv.empty() ? std::string(to_string(dist.kind)) : "historical:" + samples_csv;
    summary["N"] = samples_csv.empty() ? N : lattice.stages.front().sample_count;
    summary["risk_neutral"] = risk_neutral;
    write_file_atomic(spec.output_dir / "summary.json", summary.dump(2) + "\n");
    fmt::print("steps {}  lower {:.6e}  converged {}\n", cell.run.steps, cell.run.first_stage.lower_bound,
               cell.run.converged ? "yes" : "no (iteration limit)");
    return 0;
}

int cmd_study(const CommonOptions& o, const std::string& dists, const std::string& samples, std::size_t calibration) {
    ExperimentSpec spec = make_spec(o);
    spec.distributions = parse_kinds(dists);
    spec.sample_sizes = parse_counts(samples);
    spec.calibration_samples = calibration;
    const auto rows = run_consistency_study(spec);
    for (const auto& r : rows) {
        fmt::print("{:>16} N={:<6} gap {:.4f}  steps {:>3}\n", to_string(r.distribution), r.N, r.gap, r.steps);
    }
    fmt::print("wrote {}\n", (spec.output_dir / "gap_table.csv").string());
    return 0;
}

int cmd_trace(const CommonOptions& o, const std::string& dist_name, std::size_t N) {
    const ExperimentSpec spec = make_spec(o);
    const auto records = run_convergence_trace(spec, parse_distribution_kind(dist_name), N);
    if (!records.empty()) {
        fmt::print("iterations {}  lower {:.6e}  upper {:.6e}\n", records.size(), records.back().lower, records.back().upper);
    }
    fmt::print("wrote {}\n", (spec.output_dir / "trace.csv").string());
    return 0;
}

int cmd_eval(const CommonOptions& o, const std::string& policy_path, const std::string& dist_name,
             std::size_t simulations) {
    const ExperimentSpec spec = make_spec(o);
    const TrueDistribution dist = TrueDistribution::with_mean(parse_distribution_kind(dist_name), spec.mean_inflow);
    const Evaluation ev = evaluate_policy(spec.hydro_for(dist), read_policy(policy_path), dist, simulations, spec.seed);
    std::string csv = "path,cost\n";
    for (std::size_t k = 0; k < ev.path_costs.size(); ++k) csv += fmt::format("{},{}\n", k, ev.path_costs[k]);
    write_file_atomic(spec.output_dir / "evaluation.csv", csv);
    nlohmann::json j{{"mean", ev.mean}, {"stddev", ev.stddev}, {"simulations", simulations},
                     {"distribution", std::string(to_string(dist.kind))}, {"seed", spec.seed}};
    write_file_atomic(spec.output_dir / "evaluation.json", j.dump(2) + "\n");
    fmt::print("mean cost {:.6e}  stddev {:.6e}  over {} paths\n", ev.mean, ev.stddev, simulations);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven distributionally robust SDDP for hydrothermal scheduling"};
    app.require_subcommand(1);

    CommonOptions solve_opts, study_opts, trace_opts, eval_opts;
    std::string solve_dist = "normal", study_dists = "normal", trace_dist = "normal", eval_dist = "normal";
    std::size_t solve_n = 9000, trace_n = 9000, calibration = 100000, simulations = 1000;
    std::string study_samples = "10,100,1000,9000", samples_csv, policy_path;
    bool risk_neutral = false;

    auto* solve = app.add_subcommand("solve", "One SDDP run");
    add_common(solve, solve_opts);
    solve->add_option("--dist", solve_dist, "lognormal | normal | weibull | exponential");
    solve->add_option("--samples,-N", solve_n, "Inflow samples per stage")->check(CLI::PositiveNumber);
    solve->add_option("--samples-csv", samples_csv, "Historical inflows: one column per stage 2..T")->check(CLI::ExistingFile);
    solve->add_flag("--risk-neutral", risk_neutral, "Zero ambiguity radius at every stage");

    auto* study = app.add_subcommand("study", "Gap between risk-averse and risk-neutral values");
    add_common(study, study_opts);
    study->add_option("--dist", study_dists, "Comma-separated distributions");
    study->add_option("--samples", study_samples, "Comma-separated sample sizes");
    study->add_option("--calibration", calibration, "Draws per stage for the risk-neutral reference")->check(CLI::PositiveNumber);

    auto* trace = app.add_subcommand("trace", "Convergence trace for one cell");
    add_common(trace, trace_opts);
    trace->add_option("--dist", trace_dist, "Distribution");
    trace->add_option("--samples,-N", trace_n, "Inflow samples per stage")->check(CLI::PositiveNumber);

    auto* eval = app.add_subcommand("eval", "Out-of-sample cost of a saved policy");
    add_common(eval, eval_opts);
    eval->add_option("--policy", policy_path, "policy.json from solve")->required()->check(CLI::ExistingFile);
    eval->add_option("--dist", eval_dist, "Distribution of the simulated inflows");
    eval->add_option("--simulations", simulations, "Simulated paths")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (solve->parsed()) return cmd_solve(solve_opts, solve_dist, solve_n, samples_csv, risk_neutral);
        if (study->parsed()) return cmd_study(study_opts, study_dists, study_samples, calibration);
        if (trace->parsed()) return cmd_trace(trace_opts, trace_dist, trace_n);
        if (eval->parsed()) return cmd_eval(eval_opts, policy_path, eval_dist, simulations);
    } catch (const Error& e) {
        std::cerr << "drsddp: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "drsddp: " << e.what() << '\n';
        return 2;
    }
    return 1;
}
