#include "drsddp/lp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "drsddp/error.hpp"

namespace drsddp {

std::string_view to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "Optimal";
        case LpStatus::Infeasible: return "Infeasible";
        case LpStatus::Unbounded: return "Unbounded";
    }
    return "Unknown";
}

LinearProgram::LinearProgram(std::size_t num_variables)
    : objective_(num_variables, 0.0),
      lower_(num_variables, 0.0),
      upper_(num_variables, kInfinity),
      rows_(0, num_variables) {}

void LinearProgram::set_bounds(std::size_t var, double lower, double upper) {
    lower_.at(var) = lower;
    upper_.at(var) = upper;
}

void LinearProgram::add_constraint(std::span<const double> coefficients, Relation relation, double rhs) {
    if (coefficients.size() != num_variables()) {
        throw Error(ErrorCode::InvalidInput, "lp_solver",
                    "constraint width " + std::to_string(coefficients.size()) + " != " +
                        std::to_string(num_variables()));
    }
    rows_.append_row(coefficients);
    relations_.push_back(relation);
    rhs_.push_back(rhs);
}

void LinearProgram::validate() const {
    const std::size_t n = num_variables();
    if (n == 0) throw Error(ErrorCode::InvalidInput, "lp_solver", "no variables");
    if (lower_.size() != n || upper_.size() != n) {
        throw Error(ErrorCode::InvalidInput, "lp_solver", "bound vectors do not match objective");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(objective_[j])) {
            throw Error(ErrorCode::InvalidInput, "lp_solver", "non-finite objective coefficient");
        }
        if (std::isnan(lower_[j]) || std::isnan(upper_[j]) || lower_[j] > upper_[j] ||
            lower_[j] == kInfinity || upper_[j] == -kInfinity) {
            throw Error(ErrorCode::InvalidInput, "lp_solver",
                        "invalid bounds for variable " + std::to_string(j));
        }
    }
    for (std::size_t i = 0; i < num_constraints(); ++i) {
        if (!std::isfinite(rhs_[i])) {
            throw Error(ErrorCode::InvalidInput, "lp_solver", "non-finite right-hand side");
        }
        for (double a : rows_.row(i)) {
            if (!std::isfinite(a)) {
                throw Error(ErrorCode::InvalidInput, "lp_solver", "non-finite coefficient");
            }
        }
    }
}

namespace {

// Standard-form problem  min cost'v  s.t.  E v = rhs,  lo <= v <= hi,
// with E stored column-major.
struct StandardForm {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> columns;
    std::vector<double> cost;
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> rhs;
    // For columns equal to +/- a unit vector: the row index, else -1.
    std::vector<int> unit_row;
    std::vector<double> unit_sign;

    std::span<const double> column(std::size_t j) const { return {columns.data() + j * rows, rows}; }
};

enum class Outcome { Optimal, Unbounded, Infeasible };

class BoundedSimplex {
public:
    explicit BoundedSimplex(const StandardForm& problem)
        : p_(problem), m_(problem.rows), total_(problem.cols) {
        lo_ = p_.lo;
        hi_ = p_.hi;
        cost_ = p_.cost;
        value_.assign(total_, 0.0);
        for (std::size_t j = 0; j < total_; ++j) value_[j] = initial_value(j);
        col_norm_.resize(total_);
        for (std::size_t j = 0; j < total_; ++j) {
            double s = 1.0;
            for (double e : p_.column(j)) s += e * e;
            col_norm_[j] = std::sqrt(s);
        }
        cap_ = 1000 + 50 * (total_ + m_);
    }

    Outcome solve(const std::vector<int>* warm_start) {
        if (!(warm_start && try_warm_start(*warm_start))) {
            if (!crash()) {
                std::vector<double> phase_two_cost = cost_;
                std::fill(cost_.begin(), cost_.end(), 0.0);
                for (std::size_t a = 0; a < art_row_.size(); ++a) cost_[p_.cols + a] = 1.0;
                if (iterate() != Outcome::Optimal) {
                    throw Error(ErrorCode::NumericalFailure, "lp_solver", "phase one did not terminate");
                }
                double infeasibility = 0.0;
                for (std::size_t a = 0; a < art_row_.size(); ++a) infeasibility += value_[p_.cols + a];
                double scale = 1.0;
                for (double f : p_.rhs) scale = std::max(scale, std::abs(f));
                if (infeasibility > lp_tolerance::kFeasibility * scale) return Outcome::Infeasible;
                for (std::size_t a = 0; a < art_row_.size(); ++a) {
                    const std::size_t j = p_.cols + a;
                    hi_[j] = 0.0;
                    if (position_[j] < 0) value_[j] = 0.0;
                }
                phase_two_cost.resize(total_, 0.0);
                cost_ = std::move(phase_two_cost);
            }
        }
        return iterate();
    }

    std::size_t iterations() const { return iterations_; }
    const std::vector<double>& values() const { return value_; }
    const Eigen::VectorXd& multipliers() const { return pi_; }

    // Multipliers after two rounds of iterative refinement of B' pi = c_B,
    // with residuals accumulated in extended precision.
    std::vector<long double> refined_multipliers() const {
        std::vector<long double> pi(m_);
        for (std::size_t k = 0; k < m_; ++k) pi[k] = pi_[static_cast<Eigen::Index>(k)];
        Eigen::VectorXd r(m_);
        for (int round = 0; round < 2; ++round) {
            for (std::size_t i = 0; i < m_; ++i) {
                long double res = cost_[basis_[i]];
                for (std::size_t k = 0; k < m_; ++k) res -= static_cast<long double>(column_entry(basis_[i], k)) * pi[k];
                r[static_cast<Eigen::Index>(i)] = static_cast<double>(res);
            }
            const Eigen::VectorXd delta = binv_.transpose() * r;
            for (std::size_t k = 0; k < m_; ++k) pi[k] += delta[static_cast<Eigen::Index>(k)];
        }
        return pi;
    }
    std::vector<int> basis() const { return basis_; }

private:
    double initial_value(std::size_t j) const {
        if (std::isfinite(lo_[j])) return lo_[j];
        if (std::isfinite(hi_[j])) return hi_[j];
        return 0.0;
    }

    double column_entry(std::size_t j, std::size_t row) const {
        if (j < p_.cols) return p_.columns[j * m_ + row];
        const std::size_t a = j - p_.cols;
        return art_row_[a] == static_cast<int>(row) ? art_sign_[a] : 0.0;
    }

    double column_dot(std::size_t j, const Eigen::VectorXd& v, double* abs_dot) const {
        if (j < p_.cols) {
            const double* c = p_.columns.data() + j * m_;
            double s = 0.0, a = 0.0;
            for (std::size_t k = 0; k < m_; ++k) {
                const double t = c[k] * v[static_cast<Eigen::Index>(k)];
                s += t;
                a += std::abs(t);
            }
            if (abs_dot) *abs_dot = a;
            return s;
        }
        const std::size_t a = j - p_.cols;
        const double t = art_sign_[a] * v[art_row_[a]];
        if (abs_dot) *abs_dot = std::abs(t);
        return t;
    }

    bool try_warm_start(const std::vector<int>& basis) {
        if (basis.size() != m_) return false;
        std::vector<int> position(total_, -1);
        for (std::size_t i = 0; i < m_; ++i) {
            const int j = basis[i];
            if (j < 0 || static_cast<std::size_t>(j) >= p_.cols || position[j] >= 0) return false;
            position[j] = static_cast<int>(i);
        }
        Eigen::MatrixXd b(m_, m_);
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t k = 0; k < m_; ++k) b(k, i) = column_entry(basis[i], k);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(b);
        if (!lu.isInvertible()) return false;
        basis_ = basis;
        position_ = std::move(position);
        refactor();
        compute_basic_values();
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t j = basis_[i];
            const double tol = lp_tolerance::kFeasibility * (1.0 + std::abs(x_basic_[i]));
            if (x_basic_[i] < lo_[j] - tol || x_basic_[i] > hi_[j] + tol) {
                basis_.clear();
                position_.clear();
                for (std::size_t c = 0; c < total_; ++c) value_[c] = initial_value(c);
                return false;
            }
        }
        return true;
    }

    // Builds a slack basis from unit columns where possible; returns false
    // when artificial columns were required (phase one needed).
    bool crash() {
        std::vector<double> residual = p_.rhs;
        for (std::size_t j = 0; j < p_.cols; ++j) {
            if (value_[j] == 0.0) continue;
            const auto c = p_.column(j);
            for (std::size_t k = 0; k < m_; ++k) residual[k] -= c[k] * value_[j];
        }
        position_.assign(total_, -1);
        basis_.assign(m_, -1);
        std::vector<bool> row_done(m_, false);
        for (std::size_t j = 0; j < p_.cols; ++j) {
            const int r = p_.unit_row[j];
            if (r < 0 || row_done[r] || value_[j] != 0.0) continue;
            const double v = residual[r] * p_.unit_sign[j];
            if (v >= lo_[j] && v <= hi_[j]) {
                row_done[r] = true;
                basis_[r] = static_cast<int>(j);
                position_[j] = r;
                value_[j] = v;
            }
        }
        bool all_slack = true;
        for (std::size_t k = 0; k < m_; ++k) {
            if (row_done[k]) continue;
            all_slack = false;
            art_row_.push_back(static_cast<int>(k));
            art_sign_.push_back(residual[k] >= 0.0 ? 1.0 : -1.0);
            const std::size_t j = total_++;
            lo_.push_back(0.0);
            hi_.push_back(kInfinity);
            cost_.push_back(0.0);
            value_.push_back(std::abs(residual[k]));
            col_norm_.push_back(std::sqrt(2.0));
            position_.push_back(static_cast<int>(k));
            basis_[k] = static_cast<int>(j);
        }
        return all_slack;
    }

    void refactor() {
        Eigen::MatrixXd b(m_, m_);
        for (std::size_t i = 0; i < m_; ++i)
            for (std::size_t k = 0; k < m_; ++k) b(k, i) = column_entry(basis_[i], k);
        binv_ = b.partialPivLu().inverse();
    }

    void compute_basic_values() {
        Eigen::VectorXd r(m_);
        for (std::size_t k = 0; k < m_; ++k) r[k] = p_.rhs[k];
        for (std::size_t j = 0; j < total_; ++j) {
            if (position_[j] >= 0 || value_[j] == 0.0) continue;
            for (std::size_t k = 0; k < m_; ++k) r[k] -= column_entry(j, k) * value_[j];
        }
        x_basic_ = binv_ * r;
        for (std::size_t i = 0; i < m_; ++i) value_[basis_[i]] = x_basic_[i];
    }

    void compute_multipliers() {
        Eigen::VectorXd cb(m_);
        for (std::size_t i = 0; i < m_; ++i) cb[i] = cost_[basis_[i]];
        pi_ = binv_.transpose() * cb;
    }

    Outcome iterate() {
        constexpr int kDegenerateLimit = 20;
        int degenerate_run = 0;
        bool bland = false;
        Eigen::VectorXd alpha(m_);
        for (;;) {
            if (++iterations_ > cap_) {
                throw Error(ErrorCode::NumericalFailure, "lp_solver",
                            "iteration cap " + std::to_string(cap_) + " exceeded");
            }
            refactor();
            compute_basic_values();
            compute_multipliers();

            int entering = -1;
            int direction = 0;
            double best = 0.0;
            for (std::size_t j = 0; j < total_; ++j) {
                if (position_[j] >= 0 || lo_[j] == hi_[j]) continue;
                double abs_dot = 0.0;
                const double r = cost_[j] - column_dot(j, pi_, &abs_dot);
                const double tol = lp_tolerance::kOptimality * (1.0 + std::abs(cost_[j]) + abs_dot);
                int d = 0;
                if (r < -tol && value_[j] < hi_[j]) {
                    d = 1;
                } else if (r > tol && value_[j] > lo_[j]) {
                    d = -1;
                }
                if (d == 0) continue;
                if (bland) {
                    entering = static_cast<int>(j);
                    direction = d;
                    break;
                }
                const double score = std::abs(r) / col_norm_[j];
                if (score > best) {
                    best = score;
                    entering = static_cast<int>(j);
                    direction = d;
                }
            }
            if (entering < 0) return Outcome::Optimal;

            for (std::size_t k = 0; k < m_; ++k) alpha[k] = 0.0;
            if (static_cast<std::size_t>(entering) < p_.cols) {
                const auto c = p_.column(entering);
                for (std::size_t k = 0; k < m_; ++k) {
                    if (c[k] != 0.0) alpha += binv_.col(k) * c[k];
                }
            } else {
                const std::size_t a = entering - p_.cols;
                alpha = binv_.col(art_row_[a]) * art_sign_[a];
            }

            double step = hi_[entering] - lo_[entering];  // bound flip
            int leave = -1;
            double leave_pivot = 0.0;
            for (std::size_t i = 0; i < m_; ++i) {
                const double delta = -direction * alpha[i];
                if (std::abs(delta) <= lp_tolerance::kPivot) continue;
                const std::size_t b = basis_[i];
                double limit;
                if (delta < 0.0 && std::isfinite(lo_[b])) {
                    limit = std::max(0.0, x_basic_[i] - lo_[b]) / -delta;
                } else if (delta > 0.0 && std::isfinite(hi_[b])) {
                    limit = std::max(0.0, hi_[b] - x_basic_[i]) / delta;
                } else {
                    continue;
                }
                const double tie = 1e-12 * (1.0 + std::abs(step == kInfinity ? limit : step));
                bool take = false;
                if (limit < step - tie) {
                    take = true;
                } else if (leave >= 0 && limit <= step + tie) {
                    take = bland ? b < static_cast<std::size_t>(basis_[leave])
                                 : std::abs(delta) > leave_pivot;
                }
                if (take) {
                    step = std::min(step, limit);
                    leave = static_cast<int>(i);
                    leave_pivot = std::abs(delta);
                }
            }
            if (step == kInfinity) return Outcome::Unbounded;

            value_[entering] += direction * step;
            if (leave >= 0) {
                const int b = basis_[leave];
                const double delta = -direction * alpha[leave];
                value_[b] = delta < 0.0 ? lo_[b] : hi_[b];
                position_[b] = -1;
                basis_[leave] = entering;
                position_[entering] = leave;
            }

            if (step <= 1e-12) {
                if (++degenerate_run > kDegenerateLimit) bland = true;
            } else {
                degenerate_run = 0;
                bland = false;
            }
        }
    }

    const StandardForm& p_;
    std::size_t m_;
    std::size_t total_;
    std::vector<double> lo_, hi_, cost_, value_, col_norm_;
    std::vector<int> art_row_;
    std::vector<double> art_sign_;
    std::vector<int> basis_;
    std::vector<int> position_;
    Eigen::MatrixXd binv_;
    Eigen::VectorXd x_basic_;
    Eigen::VectorXd pi_;
    std::size_t iterations_ = 0;
    std::size_t cap_ = 0;
};

// Dual of  min c'x, Ax (>=|=) b, l <= x <= u:
//   max b'y + l'w - u'z   s.t.  A'y + w - z = c,  y >= 0 on >= rows,
// written as a minimisation. Bound columns come first so that appending
// constraints keeps column indices (and warm-start bases) stable.
StandardForm build_dual(const LinearProgram& lp) {
    const std::size_t n = lp.num_variables();
    const std::size_t m = lp.num_constraints();
    StandardForm d;
    d.rows = n;
    std::size_t bound_cols = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isfinite(lp.lower(j))) ++bound_cols;
        if (std::isfinite(lp.upper(j))) ++bound_cols;
    }
    d.cols = bound_cols + m;
    d.columns.assign(d.cols * n, 0.0);
    d.cost.reserve(d.cols);
    d.lo.reserve(d.cols);
    d.hi.reserve(d.cols);
    d.unit_row.reserve(d.cols);
    d.unit_sign.reserve(d.cols);
    std::size_t col = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (std::isfinite(lp.lower(j))) {
            d.columns[col * n + j] = 1.0;
            d.cost.push_back(-lp.lower(j));
            d.lo.push_back(0.0);
            d.hi.push_back(kInfinity);
            d.unit_row.push_back(static_cast<int>(j));
            d.unit_sign.push_back(1.0);
            ++col;
        }
        if (std::isfinite(lp.upper(j))) {
            d.columns[col * n + j] = -1.0;
            d.cost.push_back(lp.upper(j));
            d.lo.push_back(0.0);
            d.hi.push_back(kInfinity);
            d.unit_row.push_back(static_cast<int>(j));
            d.unit_sign.push_back(-1.0);
            ++col;
        }
    }
    for (std::size_t i = 0; i < m; ++i, ++col) {
        const auto row = lp.row(i);
        std::copy(row.begin(), row.end(), d.columns.begin() + static_cast<std::ptrdiff_t>(col * n));
        d.cost.push_back(-lp.rhs(i));
        const bool equality = lp.relation(i) == Relation::Equal;
        d.lo.push_back(equality ? -kInfinity : 0.0);
        d.hi.push_back(kInfinity);
        d.unit_row.push_back(-1);
        d.unit_sign.push_back(0.0);
    }
    d.rhs = lp.objective();
    return d;
}

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const std::vector<int>* warm_start) {
    lp.validate();
    const std::size_t n = lp.num_variables();
    const std::size_t m = lp.num_constraints();
    StandardForm dual = build_dual(lp);
    const std::size_t bound_cols = dual.cols - m;

    BoundedSimplex simplex(dual);
    const Outcome outcome = simplex.solve(warm_start);

    LpSolution sol;
    sol.iterations = simplex.iterations();
    if (outcome == Outcome::Unbounded) {
        sol.status = LpStatus::Infeasible;
        return sol;
    }
    if (outcome == Outcome::Infeasible) {
        // Dual infeasible: the primal is unbounded if it is feasible at all.
        // Feasibility is decided by the dual of the zero-objective problem,
        // which is always feasible and is unbounded iff the primal is infeasible.
        std::fill(dual.rhs.begin(), dual.rhs.end(), 0.0);
        BoundedSimplex feasibility(dual);
        const Outcome f = feasibility.solve(nullptr);
        sol.iterations += feasibility.iterations();
        sol.status = f == Outcome::Unbounded ? LpStatus::Infeasible : LpStatus::Unbounded;
        return sol;
    }

    sol.status = LpStatus::Optimal;
    const std::vector<long double> pi = simplex.refined_multipliers();
    sol.primal.resize(n);
    long double objective = 0.0L;
    for (std::size_t j = 0; j < n; ++j) {
        sol.primal[j] = static_cast<double>(-pi[j]);
        objective -= static_cast<long double>(lp.objective()[j]) * pi[j];
    }
    sol.duals.resize(m);
    const auto& values = simplex.values();
    for (std::size_t i = 0; i < m; ++i) {
        double y = values[bound_cols + i];
        if (lp.relation(i) == Relation::GreaterEqual) y = std::max(0.0, y);
        sol.duals[i] = y;
    }
    sol.objective = static_cast<double>(objective);
    sol.basis = simplex.basis();
    return sol;
}

}  // namespace drsddp
