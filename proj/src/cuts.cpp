#include "drsddp/cuts.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "drsddp/error.hpp"

namespace drsddp {
namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "cuts", msg); }

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void StageTemplate::validate() const {
    const std::size_t n = num_variables();
    if (upper.size() != n) fail(ErrorCode::DimensionMismatch, "bound vectors differ in length");
    if (scenarios.empty()) fail(ErrorCode::InvalidInput, "stage has no scenarios");
    const std::size_t state = scenarios.front().B.cols();
    for (const auto& s : scenarios) {
        const std::size_t m = s.A.rows();
        if (s.c.size() != n || (m > 0 && s.A.cols() != n)) fail(ErrorCode::DimensionMismatch, "cost or A width");
        if (s.relations.size() != m || s.b.size() != m || s.B.rows() != m) {
            fail(ErrorCode::DimensionMismatch, "row counts of A, b, B disagree");
        }
        if (s.B.cols() != state) fail(ErrorCode::DimensionMismatch, "B widths differ across scenarios");
    }
    if (ambiguity.support_size() != scenarios.size()) {
        fail(ErrorCode::InvalidInput, "ambiguity set does not match the scenario count");
    }
}

void CutPool::add(Cut cut) {
    if (cut.coef_x.size() != dimension_) fail(ErrorCode::DimensionMismatch, "cut width differs from pool");
    if (!std::isfinite(cut.intercept) || !std::isfinite(cut.coef_u) || !all_finite(cut.coef_x)) {
        fail(ErrorCode::InvalidInput, "non-finite cut");
    }
    if (cut.coef_u > 0.0) fail(ErrorCode::InvalidInput, "cut has positive u coefficient");
    cuts_.push_back(std::move(cut));
}

double CutPool::evaluate(std::span<const double> x, double u) const {
    if (x.size() != dimension_) fail(ErrorCode::DimensionMismatch, "evaluation point width differs from pool");
    double best = floor_;
    for (const auto& c : cuts_) best = std::max(best, c.evaluate(x, u));
    return best;
}

double evaluate_pool(const CutPool& pool, std::span<const double> x, double u) { return pool.evaluate(x, u); }

StageSolution solve_stage(const StageTemplate& stage, std::size_t scenario, std::span<const double> x_prev,
                          const CutPool* future, double next_mass_lower, const StageOptions& options,
                          std::vector<int>* warm_start) {
    if (scenario >= stage.num_scenarios()) fail(ErrorCode::InvalidInput, "scenario index out of range");
    const ScenarioData& s = stage.scenarios[scenario];
    const std::size_t n = stage.num_variables();
    if (x_prev.size() != s.B.cols()) fail(ErrorCode::DimensionMismatch, "incoming state has wrong width");
    if (future && future->dimension() != n) fail(ErrorCode::DimensionMismatch, "future pool width differs from stage");

    const std::size_t width = future ? n + 2 : n;
    const std::size_t iu = n, itheta = n + 1;
    LinearProgram lp(width);
    std::copy(s.c.begin(), s.c.end(), lp.objective().begin());
    for (std::size_t j = 0; j < n; ++j) lp.set_bounds(j, stage.lower[j], stage.upper[j]);
    if (future) {
        lp.objective()[iu] = 1.0 - next_mass_lower;
        lp.objective()[itheta] = 1.0;
        lp.set_bounds(iu, 0.0, options.u_upper);
        lp.set_bounds(itheta, future->floor(), kInfinity);
    }
    const std::size_t m = s.A.rows();
    lp.reserve_constraints(m + (future ? future->size() : 0));
    Vector row(width, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        std::fill(row.begin(), row.end(), 0.0);
        const auto a = s.A.row(r);
        std::copy(a.begin(), a.end(), row.begin());
        lp.add_constraint(row, s.relations[r], s.b[r] - dot(s.B.row(r), x_prev));
    }
    if (future) {
        for (const Cut& cut : future->cuts()) {
            for (std::size_t j = 0; j < n; ++j) row[j] = -cut.coef_x[j];
            row[iu] = -cut.coef_u;
            row[itheta] = 1.0;
            lp.add_constraint(row, Relation::GreaterEqual, cut.intercept);
        }
    }

    LpSolution sol = solve_lp(lp, warm_start && !warm_start->empty() ? warm_start : nullptr);
    if (sol.status != LpStatus::Optimal) {
        fail(ErrorCode::StageInfeasible, "scenario " + std::to_string(scenario) + " is " + std::string(to_string(sol.status)));
    }
    StageSolution out;
    out.objective = sol.objective;
    out.x.assign(sol.primal.begin(), sol.primal.begin() + static_cast<std::ptrdiff_t>(n));
    out.immediate_cost = dot(s.c, out.x);
    if (future) {
        out.u = sol.primal[iu];
        out.theta = sol.primal[itheta];
    }
    out.duals.assign(sol.duals.begin(), sol.duals.begin() + static_cast<std::ptrdiff_t>(m));
    out.basis = std::move(sol.basis);
    if (warm_start) *warm_start = out.basis;
    return out;
}

Vector scenario_subgradient(const StageSolution& solution, const DenseMatrix& B) {
    if (B.rows() != solution.duals.size()) fail(ErrorCode::DimensionMismatch, "B rows differ from dual count");
    Vector g(B.cols(), 0.0);
    for (std::size_t r = 0; r < B.rows(); ++r) {
        const double pi = solution.duals[r];
        if (pi == 0.0) continue;
        const auto b = B.row(r);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] -= b[j] * pi;
    }
    return g;
}

double cost_to_go(std::span<const double> values, double u, const AmbiguitySet& set) {
    if (values.size() != set.support_size()) fail(ErrorCode::DimensionMismatch, "value count differs from support");
    double total = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        total += set.lower()[i] * values[i] + set.spread()[i] * std::max(values[i] - u, 0.0);
    }
    return total;
}

Cut aggregate_cut(std::span<const double> values, std::span<const Vector> subgradients, std::span<const double> x_bar,
                  double u_bar, const AmbiguitySet& set) {
    const std::size_t r = set.support_size();
    if (values.size() != r || subgradients.size() != r) fail(ErrorCode::DimensionMismatch, "scenario count mismatch");
    Cut cut;
    cut.coef_x.assign(x_bar.size(), 0.0);
    for (std::size_t i = 0; i < r; ++i) {
        if (subgradients[i].size() != x_bar.size()) fail(ErrorCode::DimensionMismatch, "subgradient width");
        double w = set.lower()[i];
        if (values[i] > u_bar) {
            w += set.spread()[i];
            cut.coef_u -= set.spread()[i];
        }
        if (w == 0.0) continue;
        for (std::size_t j = 0; j < x_bar.size(); ++j) cut.coef_x[j] += w * subgradients[i][j];
    }
    cut.intercept = cost_to_go(values, u_bar, set) - dot(cut.coef_x, x_bar) - cut.coef_u * u_bar;
    return cut;
}

std::string policy_to_json(const PolicyDocument& policy) {
    nlohmann::json doc;
    doc["format"] = "drsddp-policy";
    doc["version"] = 1;
    doc["stages"] = nlohmann::json::array();
    for (std::size_t s = 0; s < policy.pools.size(); ++s) {
        const CutPool& pool = policy.pools[s];
        nlohmann::json stage;
        stage["stage"] = s + 1;
        stage["dimension"] = pool.dimension();
        stage["floor"] = pool.floor();
        stage["mass_lower"] = s < policy.mass_lower.size() ? policy.mass_lower[s] : 1.0;
        stage["mass_upper"] = s < policy.mass_upper.size() ? policy.mass_upper[s] : 1.0;
        stage["cuts"] = nlohmann::json::array();
        for (const Cut& c : pool.cuts()) {
            stage["cuts"].push_back({{"intercept", c.intercept}, {"coef_x", c.coef_x}, {"coef_u", c.coef_u}});
        }
        doc["stages"].push_back(std::move(stage));
    }
    return doc.dump(1);
}

PolicyDocument policy_from_json(std::string_view text) {
    PolicyDocument policy;
    try {
        const auto doc = nlohmann::json::parse(text);
        if (doc.value("format", "") != "drsddp-policy") fail(ErrorCode::InvalidInput, "not a policy document");
        for (const auto& stage : doc.at("stages")) {
            CutPool pool(stage.at("dimension").get<std::size_t>(), stage.at("floor").get<double>());
            for (const auto& c : stage.at("cuts")) {
                pool.add({c.at("intercept").get<double>(), c.at("coef_x").get<Vector>(), c.at("coef_u").get<double>()});
            }
            policy.pools.push_back(std::move(pool));
            policy.mass_lower.push_back(stage.at("mass_lower").get<double>());
            policy.mass_upper.push_back(stage.at("mass_upper").get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::InvalidInput, std::string("malformed policy: ") + e.what());
    }
    return policy;
}

void write_policy(const std::filesystem::path& path, const PolicyDocument& policy) {
    const auto tmp = std::filesystem::path(path).concat(".tmp");
    {
        std::ofstream out(tmp);
        if (!out) fail(ErrorCode::IoError, "cannot write " + tmp.string());
        out << policy_to_json(policy) << '\n';
        if (!out) fail(ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::IoError, "cannot move policy into place: " + ec.message());
}

PolicyDocument read_policy(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return policy_from_json(buffer.str());
}

}  // namespace drsddp
