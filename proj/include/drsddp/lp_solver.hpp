#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "drsddp/matrix.hpp"

namespace drsddp {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Solver tolerances. Residual and reduced-cost tests scale these by
/// (1 + magnitude of the quantities involved) so that problems stated in
/// MWh and dollars behave like unit-scaled ones.
namespace lp_tolerance {
inline constexpr double kFeasibility = 1e-9;
inline constexpr double kOptimality = 1e-9;
inline constexpr double kPivot = 1e-9;
}  // namespace lp_tolerance

enum class Relation { GreaterEqual, Equal };

enum class LpStatus { Optimal, Infeasible, Unbounded };

std::string_view to_string(LpStatus status);

/// min c'x  s.t.  row_i' x (>= | =) rhs_i,  lower <= x <= upper.
class LinearProgram {
public:
    explicit LinearProgram(std::size_t num_variables = 0);

    std::size_t num_variables() const noexcept { return objective_.size(); }
    std::size_t num_constraints() const noexcept { return rhs_.size(); }

    std::vector<double>& objective() noexcept { return objective_; }
    const std::vector<double>& objective() const noexcept { return objective_; }

    void set_bounds(std::size_t var, double lower, double upper);
    double lower(std::size_t var) const { return lower_[var]; }
    double upper(std::size_t var) const { return upper_[var]; }
    const std::vector<double>& lower_bounds() const noexcept { return lower_; }
    const std::vector<double>& upper_bounds() const noexcept { return upper_; }

    void add_constraint(std::span<const double> coefficients, Relation relation, double rhs);
    void reserve_constraints(std::size_t n) { rows_.reserve_rows(n); relations_.reserve(n); rhs_.reserve(n); }

    std::span<const double> row(std::size_t i) const { return rows_.row(i); }
    Relation relation(std::size_t i) const { return relations_[i]; }
    double rhs(std::size_t i) const { return rhs_[i]; }
    double& rhs(std::size_t i) { return rhs_[i]; }

    /// Throws Error(InvalidInput) when widths disagree, data is non-finite or
    /// a lower bound exceeds its upper bound.
    void validate() const;

private:
    std::vector<double> objective_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    DenseMatrix rows_;
    std::vector<Relation> relations_;
    std::vector<double> rhs_;
};

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> primal;
    /// One multiplier per constraint; nonnegative for >= rows.
    std::vector<double> duals;
    double objective = 0.0;
    std::size_t iterations = 0;
    /// Final basis of the internal simplex; may be fed back as a warm start
    /// for a problem with the same variables, bounds and objective and an
    /// extended (append-only) constraint list.
    std::vector<int> basis;
};

/// Bounded-variable revised simplex, applied to the dual of `lp` so that the
/// basis dimension equals the number of variables. `warm_start` is a basis
/// from a previous solve; it is ignored when it is not primal feasible for
/// the dual problem. Throws Error(NumericalFailure) when the iteration cap
/// is exceeded.
LpSolution solve_lp(const LinearProgram& lp, const std::vector<int>* warm_start = nullptr);

}  // namespace drsddp
