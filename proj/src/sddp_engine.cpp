#include "drsddp/sddp_engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "drsddp/error.hpp"
#include "drsddp/scenario_gen.hpp"

namespace drsddp {
namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "sddp_engine", msg); }

double next_mass_lower(const MultistageProblem& problem, std::size_t s) {
    return s + 1 < problem.horizon() ? problem.stages[s + 1].ambiguity.mass_lower() : 1.0;
}

const CutPool* future_pool(const MultistageProblem& problem, const Policy& policy, std::size_t s) {
    return s + 1 < problem.horizon() ? &policy.future[s] : nullptr;
}

std::vector<int>* slot(WarmStartCache* cache, std::size_t s, std::size_t i) {
    return cache ? cache->slot(s, i) : nullptr;
}

std::size_t sample_index(std::span<const double> f0, double uniform) {
    double cumulative = 0.0;
    for (std::size_t i = 0; i < f0.size(); ++i) {
        cumulative += f0[i];
        if (uniform < cumulative) return i;
    }
    // Roundoff left the total just below 1: take the last scenario with mass.
    for (std::size_t i = f0.size(); i-- > 0;) {
        if (f0[i] > 0.0) return i;
    }
    return f0.size() - 1;
}

double sample_stddev(std::span<const double> z) {
    if (z.size() < 2) return 0.0;
    const double mean = std::accumulate(z.begin(), z.end(), 0.0) / static_cast<double>(z.size());
    double ss = 0.0;
    for (double v : z) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(z.size() - 1));
}

}  // namespace

void MultistageProblem::validate() const {
    if (stages.size() < 2) fail(ErrorCode::InvalidInput, "horizon must be >= 2");
    if (stages.front().num_scenarios() != 1) fail(ErrorCode::InvalidInput, "stage 1 must be deterministic");
    for (std::size_t s = 0; s < stages.size(); ++s) {
        stages[s].validate();
        const std::size_t expected = s == 0 ? initial_state.size() : stages[s - 1].num_variables();
        if (stages[s].state_dimension() != expected) {
            fail(ErrorCode::DimensionMismatch, "stage " + std::to_string(s + 1) + " couples to the wrong state width");
        }
    }
    if (!(options.u_upper > 0.0) || !std::isfinite(options.u_upper)) fail(ErrorCode::InvalidInput, "u bound must be positive");
}

Policy Policy::empty_for(const MultistageProblem& problem) {
    Policy p;
    for (std::size_t s = 0; s + 1 < problem.horizon(); ++s) {
        p.future.emplace_back(problem.stages[s].num_variables(), problem.theta_floor);
    }
    return p;
}

PolicyDocument Policy::document(const MultistageProblem& problem) const {
    PolicyDocument doc;
    doc.pools = future;
    for (std::size_t s = 0; s + 1 < problem.horizon(); ++s) {
        doc.mass_lower.push_back(problem.stages[s + 1].ambiguity.mass_lower());
        doc.mass_upper.push_back(problem.stages[s + 1].ambiguity.mass_upper());
    }
    return doc;
}

WarmStartCache::WarmStartCache(const MultistageProblem& problem) {
    for (const auto& stage : problem.stages) bases_.emplace_back(stage.num_scenarios());
}

void SddpConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) fail(ErrorCode::InvalidParameters, "epsilon must lie in (0, 1)");
    if (paths < 2) fail(ErrorCode::InvalidParameters, "at least two forward paths are needed");
    if (!(z_half_alpha >= 0.0) || !std::isfinite(z_half_alpha)) fail(ErrorCode::InvalidParameters, "bad z-score");
    if (!(absolute_tolerance >= 0.0)) fail(ErrorCode::InvalidParameters, "absolute tolerance must be >= 0");
}

MultistageProblem risk_neutral_copy(const MultistageProblem& problem) {
    MultistageProblem out = problem;
    for (auto& stage : out.stages) stage.ambiguity = AmbiguitySet(stage.ambiguity.reference(), 0.0);
    return out;
}

FirstStage solve_first_stage(const MultistageProblem& problem, const Policy& policy, WarmStartCache* cache) {
    const StageSolution sol = solve_stage(problem.stages[0], 0, problem.initial_state, future_pool(problem, policy, 0),
                                          next_mass_lower(problem, 0), problem.options, slot(cache, 0, 0));
    return {sol.x, sol.u, sol.immediate_cost, sol.objective};
}

std::vector<Trajectory> forward_pass(const MultistageProblem& problem, const Policy& policy, const FirstStage& first,
                                     std::size_t M, std::uint64_t seed, std::size_t iteration, WarmStartCache* cache) {
    if (M < 2) fail(ErrorCode::InvalidParameters, "at least two forward paths are needed");
    const std::size_t T = problem.horizon();
    std::vector<Trajectory> paths(M);
    for (std::size_t p = 0; p < M; ++p) {
        auto rng = make_stream(seed, (static_cast<std::uint64_t>(iteration) << 24) + p + 1);
        Trajectory& path = paths[p];
        path.steps.reserve(T);
        path.steps.push_back({0, first.x, first.u, first.immediate_cost});
        for (std::size_t s = 1; s < T; ++s) {
            const StageTemplate& stage = problem.stages[s];
            const std::size_t i = sample_index(stage.ambiguity.reference(), uniform_open(rng));
            const StageSolution sol = solve_stage(stage, i, path.steps.back().x, future_pool(problem, policy, s),
                                                  next_mass_lower(problem, s), problem.options, slot(cache, s, i));
            path.steps.push_back({i, sol.x, sol.u, sol.immediate_cost});
        }
    }
    return paths;
}

UpperBound upper_bound(const MultistageProblem& problem, const std::vector<Trajectory>& trajectories) {
    if (trajectories.empty()) fail(ErrorCode::InvalidInput, "no trajectories");
    const std::size_t T = problem.horizon();
    UpperBound ub;
    for (const Trajectory& path : trajectories) {
        if (path.steps.size() != T) fail(ErrorCode::DimensionMismatch, "trajectory length differs from horizon");
        double w = 0.0;
        for (std::size_t s = T; s-- > 1;) {
            const AmbiguitySet& set = problem.stages[s].ambiguity;
            const double pl = set.mass_lower(), pu = set.mass_upper();
            const double u = path.steps[s - 1].u;
            const double value = path.steps[s].immediate_cost + w;
            w = pl * value + (1.0 - pl) * u + (pu - pl) * std::max(value - u, 0.0);
        }
        ub.path_costs.push_back(path.steps[0].immediate_cost + w);
    }
    ub.mean = std::accumulate(ub.path_costs.begin(), ub.path_costs.end(), 0.0) / static_cast<double>(ub.path_costs.size());
    ub.stddev = sample_stddev(ub.path_costs);
    return ub;
}

void backward_pass(const MultistageProblem& problem, Policy& policy, const std::vector<Trajectory>& trajectories,
                   WarmStartCache* cache) {
    const std::size_t T = problem.horizon();
    for (std::size_t s = T; s-- > 1;) {
        const StageTemplate& stage = problem.stages[s];
        const std::size_t S = stage.num_scenarios();
        for (const Trajectory& path : trajectories) {
            const TrajectoryStep& trial = path.steps[s - 1];
            Vector values(S);
            std::vector<Vector> subgradients(S);
            for (std::size_t i = 0; i < S; ++i) {
                const StageSolution sol = solve_stage(stage, i, trial.x, future_pool(problem, policy, s),
                                                      next_mass_lower(problem, s), problem.options, slot(cache, s, i));
                values[i] = sol.objective;
                subgradients[i] = scenario_subgradient(sol, stage.scenarios[i].B);
            }
            policy.future[s - 1].add(aggregate_cut(values, subgradients, trial.x, trial.u, stage.ambiguity));
        }
    }
}

bool should_stop(double upper, std::span<const double> path_costs, double lower, double epsilon, std::size_t k,
                 std::size_t K, double z_half_alpha, std::optional<double> absolute_tolerance) {
    if (k > K) return true;
    if (k == 0) return false;
    if (path_costs.size() < 2) fail(ErrorCode::InvalidParameters, "the stopping test needs at least two paths");
    const double bound = upper + z_half_alpha * sample_stddev(path_costs) / std::sqrt(static_cast<double>(path_costs.size()));
    if (lower <= 0.0) {
        if (!absolute_tolerance) fail(ErrorCode::NonpositiveLowerBound, "relative gap undefined for lower bound <= 0");
        return bound - lower <= *absolute_tolerance;
    }
    return bound - lower <= epsilon * lower;
}

RunResult run(const MultistageProblem& input, const SddpConfig& config, const IterationCallback& on_iteration) {
    config.validate();
    input.validate();
    const MultistageProblem problem = config.risk_neutral ? risk_neutral_copy(input) : input;
    const auto start = std::chrono::steady_clock::now();

    RunResult result;
    result.policy = Policy::empty_for(problem);
    WarmStartCache cache(problem);
    UpperBound ub;
    std::size_t k = 0;
    try {
        while (true) {
            result.first_stage = solve_first_stage(problem, result.policy, &cache);
            const double lower = result.first_stage.lower_bound;
            if (k >= 1) {
                RunRecord rec;
                rec.iteration = k;
                rec.lower = lower;
                rec.upper = ub.mean;
                rec.path_costs = ub.path_costs;
                const double bound = ub.mean + config.z_half_alpha * ub.stddev / std::sqrt(static_cast<double>(config.paths));
                rec.gap = lower > 0.0 ? (bound - lower) / lower : std::numeric_limits<double>::infinity();
                rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                result.history.push_back(rec);
                if (on_iteration) on_iteration(rec);
            }
            const std::optional<double> abs_tol =
                lower <= 0.0 ? std::optional<double>(config.absolute_tolerance) : std::nullopt;
            if (should_stop(ub.mean, ub.path_costs, lower, config.epsilon, k, config.max_iterations, config.z_half_alpha,
                            abs_tol)) {
                result.converged = k <= config.max_iterations;
                break;
            }
            const auto paths = forward_pass(problem, result.policy, result.first_stage, config.paths, config.seed, k, &cache);
            ub = upper_bound(problem, paths);
            backward_pass(problem, result.policy, paths, &cache);
            ++k;
        }
    } catch (const Error& e) {
        throw e.with_context("iteration " + std::to_string(k));
    }
    result.steps = k;
    result.policy.first_x = result.first_stage.x;
    result.policy.first_u = result.first_stage.u;
    return result;
}

}  // namespace drsddp
