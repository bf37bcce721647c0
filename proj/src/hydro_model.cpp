#include "drsddp/hydro_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "drsddp/error.hpp"

namespace drsddp {
namespace {

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "hydro_model", msg); }

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

ScenarioData stage_scenario(const HydroConfig& cfg, std::size_t t, double inflow) {
    const HydroLayout L{cfg.thermal.size(), cfg.reservoirs.size()};
    const std::size_t n = L.size();
    const std::size_t R = cfg.reservoirs.size();
    ScenarioData s;
    s.c.assign(n, 0.0);
    for (std::size_t g = 0; g < cfg.thermal.size(); ++g) s.c[L.generation(g)] = cfg.thermal[g].cost[t - 1];
    s.c[L.shortfall()] = cfg.penalty[t - 1];

    s.A = DenseMatrix(1 + R, n);
    s.B = DenseMatrix(1 + R, n);
    s.relations.assign(1 + R, Relation::Equal);
    s.b.assign(1 + R, 0.0);

    // Load balance.
    for (std::size_t g = 0; g < cfg.thermal.size(); ++g) s.A(0, L.generation(g)) = 1.0;
    for (std::size_t r = 0; r < R; ++r) s.A(0, L.release(r)) = 1.0;
    s.A(0, L.shortfall()) = 1.0;
    s.b[0] = cfg.demand[t - 1];

    // Water balance: v_t + x_t + s_t = v_{t-1} + I_t.
    for (std::size_t r = 0; r < R; ++r) {
        s.A(1 + r, L.storage(r)) = 1.0;
        s.A(1 + r, L.release(r)) = 1.0;
        s.A(1 + r, L.spill(r)) = 1.0;
        s.B(1 + r, L.storage(r)) = -1.0;
        s.b[1 + r] = cfg.reservoirs[r].inflow_share * inflow;
    }
    return s;
}

StageTemplate empty_template(const HydroConfig& cfg) {
    const HydroLayout L{cfg.thermal.size(), cfg.reservoirs.size()};
    StageTemplate tmpl;
    tmpl.lower.assign(L.size(), 0.0);
    tmpl.upper.assign(L.size(), kInfinity);
    for (std::size_t g = 0; g < cfg.thermal.size(); ++g) {
        tmpl.lower[L.generation(g)] = cfg.thermal[g].min_output;
        tmpl.upper[L.generation(g)] = cfg.thermal[g].max_output;
    }
    for (std::size_t r = 0; r < cfg.reservoirs.size(); ++r) {
        tmpl.lower[L.storage(r)] = cfg.reservoirs[r].min_storage;
        tmpl.upper[L.storage(r)] = cfg.reservoirs[r].max_storage;
    }
    return tmpl;
}

Vector per_stage(const toml::node_view<const toml::node>& node, std::size_t T, const std::string& key) {
    if (!node) fail(ErrorCode::ConfigError, "missing key '" + key + "'");
    if (auto v = node.value<double>()) return Vector(T, *v);
    if (const auto* arr = node.as_array()) {
        Vector out;
        for (const auto& el : *arr) {
            auto v = el.value<double>();
            if (!v) fail(ErrorCode::ConfigError, "'" + key + "' must hold numbers");
            out.push_back(*v);
        }
        if (out.size() != T) fail(ErrorCode::ConfigError, "'" + key + "' needs " + std::to_string(T) + " entries");
        return out;
    }
    fail(ErrorCode::ConfigError, "'" + key + "' must be a number or an array");
}

double number(const toml::node_view<const toml::node>& node, const std::string& key, std::optional<double> fallback = {}) {
    if (!node) {
        if (fallback) return *fallback;
        fail(ErrorCode::ConfigError, "missing key '" + key + "'");
    }
    auto v = node.value<double>();
    if (!v) fail(ErrorCode::ConfigError, "'" + key + "' must be a number");
    return *v;
}

Vector uniform_costs(std::size_t T, double lo, double hi, std::uint64_t seed) {
    auto rng = make_stream(seed, 0x636f7374ULL);
    Vector out(T);
    for (auto& c : out) c = lo + (hi - lo) * uniform_open(rng);
    return out;
}

}  // namespace

void HydroConfig::validate() const {
    if (T < 2) fail(ErrorCode::InvalidInput, "horizon must be >= 2");
    if (thermal.empty() && reservoirs.empty()) fail(ErrorCode::InvalidInput, "no generation resources");
    if (demand.size() != T || penalty.size() != T) fail(ErrorCode::InvalidInput, "demand and penalty need T entries");
    for (const auto& u : thermal) {
        if (!finite_nonneg(u.min_output) || !finite_nonneg(u.max_output) || u.min_output > u.max_output) {
            fail(ErrorCode::InvalidInput, "thermal bounds must satisfy 0 <= min <= max");
        }
        if (u.cost.size() != T) fail(ErrorCode::InvalidInput, "thermal cost needs T entries");
        if (!std::all_of(u.cost.begin(), u.cost.end(), finite_nonneg)) fail(ErrorCode::InvalidInput, "negative cost");
    }
    for (const auto& r : reservoirs) {
        if (!finite_nonneg(r.min_storage) || !std::isfinite(r.max_storage) || r.min_storage > r.max_storage) {
            fail(ErrorCode::InvalidInput, "storage bounds must satisfy 0 <= min <= max");
        }
        if (r.initial_storage < r.min_storage || r.initial_storage > r.max_storage) {
            fail(ErrorCode::InvalidInput, "initial storage outside bounds");
        }
        if (!finite_nonneg(r.inflow_share)) fail(ErrorCode::InvalidInput, "inflow share must be >= 0");
    }
    if (!std::all_of(demand.begin(), demand.end(), finite_nonneg) ||
        !std::all_of(penalty.begin(), penalty.end(), finite_nonneg)) {
        fail(ErrorCode::InvalidInput, "demand and penalty must be >= 0");
    }
    if (!finite_nonneg(first_stage_inflow)) fail(ErrorCode::InvalidInput, "first-stage inflow must be >= 0");
    double must_run = 0.0;
    for (const auto& u : thermal) must_run += u.min_output;
    for (std::size_t t = 0; t < T; ++t) {
        if (must_run > demand[t]) {
            fail(ErrorCode::InfeasibleConfig, "minimum thermal output exceeds demand at stage " + std::to_string(t + 1));
        }
    }
}

double HydroConfig::value_bound() const {
    double worst = 0.0;
    for (std::size_t t = 0; t < T; ++t) {
        worst = std::max(worst, penalty[t]);
        for (const auto& u : thermal) worst = std::max(worst, u.cost[t]);
    }
    double total = 0.0;
    for (double d : demand) total += d;
    return worst * total;
}

HydroConfig default_hydro_config(std::size_t T, double thermal_capacity, double mean_inflow, std::uint64_t cost_seed) {
    HydroConfig cfg;
    cfg.T = T;
    cfg.thermal.push_back({0.0, thermal_capacity, uniform_costs(T, 45.0, 85.0, cost_seed)});
    cfg.reservoirs.push_back(Reservoir{});
    cfg.demand.assign(T, 0.6 * (thermal_capacity + mean_inflow));
    cfg.penalty.assign(T, 1000.0);
    cfg.first_stage_inflow = mean_inflow;
    return cfg;
}

HydroConfig parse_hydro_config(std::string_view text) {
    toml::table doc;
    try {
        doc = toml::parse(text);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << e.description() << " at line " << e.source().begin.line;
        fail(ErrorCode::ConfigError, msg.str());
    }
    const toml::table& root = doc;
    HydroConfig cfg;
    const auto T = root["T"].value<std::int64_t>();
    if (!T || *T < 2) fail(ErrorCode::ConfigError, "'T' must be an integer >= 2");
    cfg.T = static_cast<std::size_t>(*T);
    cfg.demand = per_stage(root["demand"], cfg.T, "demand");
    cfg.penalty = per_stage(root["penalty"], cfg.T, "penalty");
    cfg.first_stage_inflow = number(root["first_stage_inflow"], "first_stage_inflow");

    if (const auto* units = root["thermal"].as_array()) {
        for (const auto& el : *units) {
            const auto* tbl = el.as_table();
            if (!tbl) fail(ErrorCode::ConfigError, "[[thermal]] entries must be tables");
            const toml::node_view<const toml::node> u{tbl};
            ThermalUnit unit;
            unit.min_output = number(u["min_output"], "thermal.min_output", 0.0);
            unit.max_output = number(u["max_output"], "thermal.max_output");
            if (u["cost"]) {
                unit.cost = per_stage(u["cost"], cfg.T, "thermal.cost");
            } else if (const auto* range = u["cost_range"].as_array(); range && range->size() == 2) {
                const auto lo = (*range)[0].value<double>();
                const auto hi = (*range)[1].value<double>();
                const auto seed = u["cost_seed"].value<std::int64_t>();
                if (!lo || !hi || !seed) fail(ErrorCode::ConfigError, "cost_range needs two numbers and an integer cost_seed");
                unit.cost = uniform_costs(cfg.T, *lo, *hi, static_cast<std::uint64_t>(*seed));
            } else {
                fail(ErrorCode::ConfigError, "thermal unit needs 'cost' or 'cost_range' with 'cost_seed'");
            }
            cfg.thermal.push_back(std::move(unit));
        }
    }
    if (const auto* reservoirs = root["reservoir"].as_array()) {
        for (const auto& el : *reservoirs) {
            const auto* tbl = el.as_table();
            if (!tbl) fail(ErrorCode::ConfigError, "[[reservoir]] entries must be tables");
            const toml::node_view<const toml::node> r{tbl};
            Reservoir res;
            res.min_storage = number(r["min_storage"], "reservoir.min_storage");
            res.max_storage = number(r["max_storage"], "reservoir.max_storage");
            res.initial_storage = number(r["initial_storage"], "reservoir.initial_storage");
            res.inflow_share = number(r["inflow_share"], "reservoir.inflow_share", 1.0);
            cfg.reservoirs.push_back(res);
        }
    }
    try {
        cfg.validate();
    } catch (const Error& e) {
        if (e.code() == ErrorCode::InfeasibleConfig) throw;
        fail(ErrorCode::ConfigError, e.what());
    }
    return cfg;
}

HydroConfig read_hydro_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_hydro_config(buffer.str());
}

StageTemplate hydro_stage_template(const HydroConfig& cfg, std::size_t t, double inflow) {
    cfg.validate();
    if (t < 1 || t > cfg.T) fail(ErrorCode::InvalidInput, "stage index out of range");
    if (!finite_nonneg(inflow)) fail(ErrorCode::InvalidInput, "inflow must be >= 0");
    StageTemplate tmpl = empty_template(cfg);
    tmpl.scenarios.push_back(stage_scenario(cfg, t, inflow));
    return tmpl;
}

std::vector<StageTemplate> build_hydro_templates(const HydroConfig& cfg, const Lattice& lattice, double z_half_alpha) {
    cfg.validate();
    if (lattice.horizon != cfg.T || lattice.stages.size() + 1 != cfg.T) {
        fail(ErrorCode::DimensionMismatch, "lattice has " + std::to_string(lattice.horizon) + " stages, config has " +
                                               std::to_string(cfg.T));
    }
    std::vector<StageTemplate> out;
    out.reserve(cfg.T);
    out.push_back(hydro_stage_template(cfg, 1, cfg.first_stage_inflow));
    for (std::size_t t = 2; t <= cfg.T; ++t) {
        const StageSupport& support = lattice.stage(t);
        StageTemplate tmpl = empty_template(cfg);
        for (double inflow : support.values) {
            if (!finite_nonneg(inflow)) fail(ErrorCode::InvalidInput, "negative inflow in lattice");
            tmpl.scenarios.push_back(stage_scenario(cfg, t, inflow));
        }
        tmpl.ambiguity = build_ambiguity(support.f0, support.sample_count, z_half_alpha);
        out.push_back(std::move(tmpl));
    }
    return out;
}

Vector hydro_initial_state(const HydroConfig& cfg) {
    const HydroLayout L{cfg.thermal.size(), cfg.reservoirs.size()};
    Vector x0(L.size(), 0.0);
    for (std::size_t r = 0; r < cfg.reservoirs.size(); ++r) x0[L.storage(r)] = cfg.reservoirs[r].initial_storage;
    return x0;
}

}  // namespace drsddp
