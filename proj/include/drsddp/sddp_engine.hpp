#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "drsddp/cuts.hpp"

namespace drsddp {

/// Stages 1..T live at indices 0..T-1. Stage 1 must have a single scenario;
/// its B matrix multiplies `initial_state`.
struct MultistageProblem {
    std::vector<StageTemplate> stages;
    Vector initial_state;
    StageOptions options;
    double theta_floor = 0.0;

    std::size_t horizon() const noexcept { return stages.size(); }
    /// Throws Error(InvalidInput) / Error(DimensionMismatch) on inconsistent data.
    void validate() const;
};

/// future[s] approximates the cost-to-go seen from stage s + 1, for
/// s = 0..T-2. Pools only grow.
struct Policy {
    std::vector<CutPool> future;
    Vector first_x;
    double first_u = 0.0;

    static Policy empty_for(const MultistageProblem& problem);
    PolicyDocument document(const MultistageProblem& problem) const;
};

/// Simplex bases per (stage, scenario), reused across solves.
class WarmStartCache {
public:
    explicit WarmStartCache(const MultistageProblem& problem);
    std::vector<int>* slot(std::size_t stage, std::size_t scenario) { return &bases_.at(stage).at(scenario); }

private:
    std::vector<std::vector<std::vector<int>>> bases_;
};

struct FirstStage {
    Vector x;
    double u = 0.0;
    double immediate_cost = 0.0;
    double lower_bound = 0.0;
};

struct TrajectoryStep {
    std::size_t scenario = 0;
    Vector x;
    double u = 0.0;
    double immediate_cost = 0.0;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;  // one per stage, stage 1 first
};

struct UpperBound {
    double mean = 0.0;
    Vector path_costs;
    double stddev = 0.0;  // sample standard deviation of path_costs
};

struct RunRecord {
    std::size_t iteration = 0;
    double lower = 0.0;
    double upper = 0.0;
    Vector path_costs;
    /// (upper + z * s / sqrt(M) - lower) / lower, the stopping statistic;
    /// infinite while the lower bound is not positive.
    double gap = 0.0;
    double seconds = 0.0;
};

struct SddpConfig {
    double epsilon = 0.05;
    std::size_t max_iterations = 300;
    std::size_t paths = 6;
    double z_half_alpha = 1.959963984540054;
    std::uint64_t seed = 1;
    /// Forces d = 0 at every stage.
    bool risk_neutral = false;
    /// Used in place of the relative test when the lower bound is <= 0.
    double absolute_tolerance = 1e-6;

    void validate() const;
};

struct RunResult {
    Policy policy;
    FirstStage first_stage;
    std::vector<RunRecord> history;
    std::size_t steps = 0;
    bool converged = false;  // false when the iteration limit stopped the run
};

/// Problem with every ambiguity radius set to 0.
MultistageProblem risk_neutral_copy(const MultistageProblem& problem);

/// Stage-1 LP with the current approximation; its optimum is the lower bound.
FirstStage solve_first_stage(const MultistageProblem& problem, const Policy& policy, WarmStartCache* cache = nullptr);

/// M paths; path p of iteration k samples from substream (k, p) of `seed`,
/// each stage drawing its scenario from f0.
std::vector<Trajectory> forward_pass(const MultistageProblem& problem, const Policy& policy, const FirstStage& first,
                                     std::size_t M, std::uint64_t seed, std::size_t iteration,
                                     WarmStartCache* cache = nullptr);

/// Path estimator of the risk-adjusted cost. With w_{T+1} = 0 and
/// t = T..2,
///   w_t = Pl_t (c_t x_t + w_{t+1}) + (1 - Pl_t) u_{t-1}
///         + (Pu_t - Pl_t) [c_t x_t + w_{t+1} - u_{t-1}]^+,
/// where Pl_t, Pu_t are the masses of stage t's set; the path cost is
/// c_1 x_1 + w_2.
UpperBound upper_bound(const MultistageProblem& problem, const std::vector<Trajectory>& trajectories);

/// One aggregate cut per trajectory and stage t = T..2, appended to the
/// pool of stage t - 1.
void backward_pass(const MultistageProblem& problem, Policy& policy, const std::vector<Trajectory>& trajectories,
                   WarmStartCache* cache = nullptr);

/// Stop when k > K, or when k >= 1 and
///   upper + z * s / sqrt(M) - lower <= epsilon * lower.
/// With lower <= 0 the relative test is undefined: an absolute tolerance
/// replaces epsilon * lower if supplied, otherwise
/// Error(NonpositiveLowerBound) is thrown.
bool should_stop(double upper, std::span<const double> path_costs, double lower, double epsilon, std::size_t k,
                 std::size_t K, double z_half_alpha, std::optional<double> absolute_tolerance = std::nullopt);

using IterationCallback = std::function<void(const RunRecord&)>;

/// Full loop: first stage, stopping test, forward pass, upper bound,
/// backward pass. Errors carry the iteration index.
RunResult run(const MultistageProblem& problem, const SddpConfig& config, const IterationCallback& on_iteration = {});

}  // namespace drsddp
