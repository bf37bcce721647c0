#include "drsddp/experiment.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include <boost/math/distributions/normal.hpp>
#include <fmt/format.h>

#include "drsddp/error.hpp"

namespace drsddp {
namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "experiment_cli", msg); }

constexpr std::uint64_t kCalibrationSeedOffset = 0x9e3779b97f4a7c15ULL;

double elapsed(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string cell_tag(DistributionKind kind, std::size_t N) {
    return std::string(to_string(kind)) + ", N=" + std::to_string(N);
}

}  // namespace

void ExperimentSpec::validate() const {
    if (distributions.empty()) fail(ErrorCode::InvalidParameters, "no distributions");
    if (sample_sizes.empty()) fail(ErrorCode::InvalidParameters, "no sample sizes");
    for (std::size_t n : sample_sizes) {
        if (n == 0) fail(ErrorCode::InvalidParameters, "sample sizes must be positive");
    }
    if (scenarios == 0 || paths < 2 || calibration_samples == 0) {
        fail(ErrorCode::InvalidParameters, "scenario, path and calibration counts must be positive (paths >= 2)");
    }
    if (!hydro && horizon < 2) fail(ErrorCode::InvalidParameters, "horizon must be >= 2");
    if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorCode::InvalidParameters, "epsilon must lie in (0, 1)");
    if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorCode::InvalidParameters, "alpha must lie in (0, 1)");
    if (!(mean_inflow > 0.0) || !(thermal_capacity >= 0.0)) fail(ErrorCode::InvalidParameters, "bad system scale");
}

double ExperimentSpec::z_half_alpha() const {
    return boost::math::quantile(boost::math::normal_distribution<double>(), 1.0 - alpha / 2.0);
}

SddpConfig ExperimentSpec::sddp_config() const {
    SddpConfig c;
    c.epsilon = epsilon;
    c.max_iterations = max_iterations;
    c.paths = paths;
    c.z_half_alpha = z_half_alpha();
    c.seed = seed;
    return c;
}

HydroConfig ExperimentSpec::hydro_for(const TrueDistribution& dist) const {
    if (hydro) return *hydro;
    HydroConfig cfg = default_hydro_config(horizon, thermal_capacity, mean_inflow, cost_seed);
    cfg.first_stage_inflow = dist.mean();
    return cfg;
}

Lattice study_lattice(const ExperimentSpec& spec, const TrueDistribution& dist, std::size_t N) {
    const std::size_t T = spec.hydro ? spec.hydro->T : spec.horizon;
    return build_lattice(dist, T, N, std::min(spec.scenarios, N), spec.seed);
}

Lattice calibration_lattice(const ExperimentSpec& spec, const TrueDistribution& dist) {
    const std::size_t T = spec.hydro ? spec.hydro->T : spec.horizon;
    const std::size_t N = spec.calibration_samples;
    return build_lattice(dist, T, N, std::min(spec.scenarios, N), spec.seed + kCalibrationSeedOffset);
}

CellResult solve_cell(const ExperimentSpec& spec, const TrueDistribution& dist, const Lattice& lattice, bool risk_neutral) {
    const auto start = std::chrono::steady_clock::now();
    const HydroConfig cfg = spec.hydro_for(dist);
    CellResult cell;
    cell.problem.stages = build_hydro_templates(cfg, lattice, spec.z_half_alpha());
    cell.problem.initial_state = hydro_initial_state(cfg);
    cell.problem.options.u_upper = cfg.value_bound();
    SddpConfig c = spec.sddp_config();
    c.risk_neutral = risk_neutral;
    if (risk_neutral) cell.problem = risk_neutral_copy(cell.problem);
    cell.run = run(cell.problem, c);
    cell.seconds = elapsed(start);
    return cell;
}

std::vector<GapRow> run_consistency_study(const ExperimentSpec& spec) {
    spec.validate();
    std::vector<GapRow> rows;
    for (DistributionKind kind : spec.distributions) {
        const TrueDistribution dist = TrueDistribution::with_mean(kind, spec.mean_inflow);
        double z_n = 0.0;
        try {
            z_n = solve_cell(spec, dist, calibration_lattice(spec, dist), true).run.first_stage.lower_bound;
        } catch (const Error& e) {
            throw e.with_context(std::string(to_string(kind)) + ", calibration");
        }
        if (!(z_n > 0.0)) fail(ErrorCode::NonpositiveLowerBound, "risk-neutral value must be positive for a relative gap");
        for (std::size_t N : spec.sample_sizes) {
            try {
                const CellResult cell = solve_cell(spec, dist, study_lattice(spec, dist, N), false);
                GapRow row;
                row.distribution = kind;
                row.N = N;
                row.z_a = cell.run.first_stage.lower_bound;
                row.z_n = z_n;
                row.gap = (row.z_a - z_n) / z_n;
                row.steps = cell.run.steps;
                row.seconds = cell.seconds;
                rows.push_back(row);
            } catch (const Error& e) {
                throw e.with_context(cell_tag(kind, N));
            }
        }
    }
    write_file_atomic(spec.output_dir / "gap_table.csv", gap_table_csv(rows, spec.deterministic_output));
    return rows;
}

std::vector<RunRecord> run_convergence_trace(const ExperimentSpec& spec, DistributionKind kind, std::size_t N) {
    spec.validate();
    const TrueDistribution dist = TrueDistribution::with_mean(kind, spec.mean_inflow);
    std::vector<RunRecord> records;
    try {
        records = solve_cell(spec, dist, study_lattice(spec, dist, N), false).run.history;
    } catch (const Error& e) {
        throw e.with_context(cell_tag(kind, N));
    }
    write_file_atomic(spec.output_dir / "trace.csv", trace_csv(records, spec.deterministic_output));
    return records;
}

std::string gap_table_csv(const std::vector<GapRow>& rows, bool deterministic) {
    std::string out = "distribution,N,gap,steps,z_a,z_n,seconds\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{},{},{},{}\n", to_string(r.distribution), r.N, r.gap, r.steps, r.z_a, r.z_n,
                           deterministic ? 0.0 : r.seconds);
    }
    return out;
}

std::string trace_csv(const std::vector<RunRecord>& records, bool deterministic) {
    std::string out = "iter,lower,upper,gap,log_upper,log_lower,seconds\n";
    for (const auto& r : records) {
        const double log_upper = r.upper > 0.0 ? std::log10(r.upper) : std::nan("");
        const double log_lower = r.lower > 0.0 ? std::log10(r.lower) : std::nan("");
        out += fmt::format("{},{},{},{},{},{},{}\n", r.iteration, r.lower, r.upper, r.gap, log_upper, log_lower,
                           deterministic ? 0.0 : r.seconds);
    }
    return out;
}

std::string run_records_csv(const std::vector<RunRecord>& records, bool deterministic) {
    std::string out = "k,lower_bound,upper_bound,gap,seconds\n";
    for (const auto& r : records) {
        out += fmt::format("{},{},{},{},{}\n", r.iteration, r.lower, r.upper, r.gap, deterministic ? 0.0 : r.seconds);
    }
    return out;
}

Evaluation evaluate_policy(const HydroConfig& cfg, const PolicyDocument& policy, const TrueDistribution& dist,
                           std::size_t simulations, std::uint64_t seed) {
    cfg.validate();
    const std::size_t T = cfg.T;
    const std::size_t n = cfg.num_variables();
    if (policy.pools.size() + 1 != T) fail(ErrorCode::DimensionMismatch, "policy horizon differs from the system");
    for (const auto& pool : policy.pools) {
        if (pool.dimension() != n) fail(ErrorCode::DimensionMismatch, "policy cut width differs from the system");
    }
    if (simulations == 0) fail(ErrorCode::InvalidParameters, "need at least one simulation");
    StageOptions options;
    options.u_upper = cfg.value_bound();

    Evaluation ev;
    const StageTemplate first = hydro_stage_template(cfg, 1, cfg.first_stage_inflow);
    const StageSolution s1 = solve_stage(first, 0, hydro_initial_state(cfg), &policy.pools[0], policy.mass_lower[0], options);
    for (std::size_t k = 0; k < simulations; ++k) {
        auto rng = make_stream(seed, k + 1);
        double cost = s1.immediate_cost;
        Vector x = s1.x;
        for (std::size_t t = 2; t <= T; ++t) {
            const StageTemplate stage = hydro_stage_template(cfg, t, dist.quantile(uniform_open(rng)));
            const bool last = t == T;
            const StageSolution sol = solve_stage(stage, 0, x, last ? nullptr : &policy.pools[t - 1],
                                                  last ? 1.0 : policy.mass_lower[t - 1], options);
            cost += sol.immediate_cost;
            x = sol.x;
        }
        ev.path_costs.push_back(cost);
    }
    ev.mean = std::accumulate(ev.path_costs.begin(), ev.path_costs.end(), 0.0) / static_cast<double>(simulations);
    if (simulations > 1) {
        double ss = 0.0;
        for (double c : ev.path_costs) ss += (c - ev.mean) * (c - ev.mean);
        ev.stddev = std::sqrt(ss / static_cast<double>(simulations - 1));
    }
    return ev;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) fail(ErrorCode::IoError, "cannot create " + path.parent_path().string() + ": " + ec.message());
    const auto tmp = std::filesystem::path(path).concat(".tmp");
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
        out << contents;
        if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::IoError, "cannot move " + tmp.string() + " into place: " + ec.message());
}

}  // namespace drsddp
