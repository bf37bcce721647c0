#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drsddp/ambiguity.hpp"
#include "drsddp/lp_solver.hpp"
#include "drsddp/matrix.hpp"

namespace drsddp {

/// One scenario of a stage:  min c'x  s.t.  A x (rel) b - B x_prev.
struct ScenarioData {
    Vector c;
    DenseMatrix A;
    std::vector<Relation> relations;
    Vector b;
    DenseMatrix B;  // rows of A by previous-stage decision dimension
};

/// Stage LP family. All scenarios share variable bounds and dimensions;
/// `ambiguity` is the set over this stage's scenarios.
struct StageTemplate {
    Vector lower;
    Vector upper;
    std::vector<ScenarioData> scenarios;
    AmbiguitySet ambiguity{{1.0}, 0.0};

    std::size_t num_variables() const noexcept { return lower.size(); }
    std::size_t num_scenarios() const noexcept { return scenarios.size(); }
    std::size_t state_dimension() const { return scenarios.at(0).B.cols(); }

    /// Throws Error(DimensionMismatch) on inconsistent shapes and
    /// Error(InvalidInput) when the set does not match the scenario count.
    void validate() const;
};

/// theta >= intercept + coef_x' x + coef_u u.
struct Cut {
    double intercept = 0.0;
    Vector coef_x;
    double coef_u = 0.0;

    double evaluate(std::span<const double> x, double u) const { return intercept + dot(coef_x, x) + coef_u * u; }
};

/// Outer approximation of one cost-to-go function: max(floor, max of cuts).
class CutPool {
public:
    explicit CutPool(std::size_t dimension = 0, double floor = 0.0) : dimension_(dimension), floor_(floor) {}

    std::size_t dimension() const noexcept { return dimension_; }
    double floor() const noexcept { return floor_; }
    std::size_t size() const noexcept { return cuts_.size(); }
    bool empty() const noexcept { return cuts_.empty(); }
    const std::vector<Cut>& cuts() const noexcept { return cuts_; }

    /// Throws Error(DimensionMismatch) or Error(InvalidInput) for non-finite
    /// entries or coef_u > 0.
    void add(Cut cut);

    double evaluate(std::span<const double> x, double u) const;

private:
    std::size_t dimension_;
    double floor_;
    std::vector<Cut> cuts_;
};

double evaluate_pool(const CutPool& pool, std::span<const double> x, double u);

struct StageOptions {
    /// Box for the risk variable u.
    double u_upper = 1e12;
};

struct StageSolution {
    double objective = 0.0;       // full LP optimum
    double immediate_cost = 0.0;  // c'x
    Vector x;
    double u = 0.0;
    double theta = 0.0;
    Vector duals;                 // one per row of A
    std::vector<int> basis;
};

/// Solves scenario i of the stage at incoming state x_prev. With a future
/// pool the LP gains u in [0, u_upper] and theta >= pool floor, the
/// objective gains (1 - next_mass_lower) u + theta, and each cut becomes a
/// row. Without one (last stage) neither variable exists. `warm_start`, if
/// given, seeds the simplex and receives the final basis.
/// Throws Error(StageInfeasible) when the LP is not optimal.
StageSolution solve_stage(const StageTemplate& stage, std::size_t scenario, std::span<const double> x_prev,
                          const CutPool* future, double next_mass_lower, const StageOptions& options = {},
                          std::vector<int>* warm_start = nullptr);

/// g = -B' pi, a subgradient of the scenario value in x_prev.
Vector scenario_subgradient(const StageSolution& solution, const DenseMatrix& B);

/// sum f_lo Q + sum (f_hi - f_lo) [Q - u]^+; the risk-adjusted cost-to-go
/// without its (1 - P_lo) u part, which sits in the stage objective.
double cost_to_go(std::span<const double> values, double u, const AmbiguitySet& set);

/// Supporting hyperplane of cost_to_go at (x_bar, u_bar) from scenario values
/// and subgradients. Scenarios with value exactly u_bar get zero tail weight.
Cut aggregate_cut(std::span<const double> values, std::span<const Vector> subgradients, std::span<const double> x_bar,
                  double u_bar, const AmbiguitySet& set);

/// Serialized policy: pools[s] is the approximation used by stage s + 1,
/// mass_lower[s] / mass_upper[s] belong to the set of stage s + 2.
struct PolicyDocument {
    std::vector<CutPool> pools;
    Vector mass_lower;
    Vector mass_upper;
};

std::string policy_to_json(const PolicyDocument& policy);
/// Throws Error(InvalidInput) on malformed documents.
PolicyDocument policy_from_json(std::string_view text);
/// Throws Error(IoError) when the file cannot be written or read.
void write_policy(const std::filesystem::path& path, const PolicyDocument& policy);
PolicyDocument read_policy(const std::filesystem::path& path);

}  // namespace drsddp
