#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "drsddp/cuts.hpp"
#include "drsddp/error.hpp"
#include "drsddp/hydro_model.hpp"

using namespace drsddp;

namespace {

// min x  s.t.  x >= 1 - x_prev,  x >= 0.
StageTemplate one_dimensional_stage() {
    StageTemplate t;
    t.lower = {0.0};
    t.upper = {kInfinity};
    ScenarioData s;
    s.c = {1.0};
    s.A = DenseMatrix(1, 1, 1.0);
    s.B = DenseMatrix(1, 1, 1.0);
    s.relations = {Relation::GreaterEqual};
    s.b = {1.0};
    t.scenarios.push_back(s);
    return t;
}

HydroConfig small_hydro() {
    HydroConfig cfg = default_hydro_config(2, 100.0, 60.0, 3);
    cfg.reservoirs[0] = {20.0, 200.0, 110.0, 1.0};
    return cfg;
}

}  // namespace

TEST_CASE("last stage without a pool is the plain stage LP") {
    const StageTemplate t = one_dimensional_stage();
    const Vector x_prev{0.25};
    const StageSolution sol = solve_stage(t, 0, x_prev, nullptr, 1.0);
    CHECK(sol.objective == doctest::Approx(0.75));
    CHECK(sol.x == Vector{0.75});
    CHECK(sol.u == 0.0);
    CHECK(sol.theta == 0.0);
}

TEST_CASE("a constant cut lifts the objective by its intercept") {
    const StageTemplate t = one_dimensional_stage();
    const Vector x_prev{0.0};
    CutPool empty(1);
    const StageSolution base = solve_stage(t, 0, x_prev, &empty, 1.0);
    CutPool pool(1);
    pool.add({10.0, {0.0}, 0.0});
    const StageSolution lifted = solve_stage(t, 0, x_prev, &pool, 1.0);
    CHECK(lifted.theta == doctest::Approx(10.0));
    CHECK(lifted.objective - base.objective == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("scenario subgradient examples") {
    const StageTemplate t = one_dimensional_stage();
    const Vector x_prev{0.0};
    const StageSolution sol = solve_stage(t, 0, x_prev, nullptr, 1.0);
    CHECK(sol.duals == Vector{1.0});
    CHECK(scenario_subgradient(sol, t.scenarios[0].B) == Vector{-1.0});
    CHECK(scenario_subgradient(sol, DenseMatrix(1, 3, 0.0)) == Vector{0.0, 0.0, 0.0});
    CHECK_THROWS_AS(scenario_subgradient(sol, DenseMatrix(2, 1, 0.0)), Error);
}

TEST_CASE("stage errors") {
    StageTemplate t = one_dimensional_stage();
    t.upper = {0.5};
    const Vector x_prev{0.0};
    try {
        solve_stage(t, 0, x_prev, nullptr, 1.0);
        FAIL("expected StageInfeasible");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::StageInfeasible);
    }
    CHECK_THROWS_AS(solve_stage(t, 1, x_prev, nullptr, 1.0), Error);
    const Vector wide{0.0, 0.0};
    CHECK_THROWS_AS(solve_stage(t, 0, wide, nullptr, 1.0), Error);
}

TEST_CASE("aggregate cut, two scenarios") {
    const AmbiguitySet set({0.5, 0.5}, 0.2);  // f_lo = 0.3, f_hi = 0.7
    const Vector q{1.0, 5.0};
    const std::vector<Vector> g{{2.0}, {-3.0}};
    const Vector x_bar{4.0};
    const Cut cut = aggregate_cut(q, g, x_bar, 2.0, set);
    CHECK(cut.coef_u == doctest::Approx(-0.4));
    CHECK(cut.coef_x[0] == doctest::Approx(0.6 * (0.5 * 2.0 + 0.5 * -3.0) + 0.8 * 0.5 * -3.0));
    // Tight at the anchor.
    CHECK(cut.evaluate(x_bar, 2.0) == doctest::Approx(cost_to_go(q, 2.0, set)).epsilon(1e-14));
    CHECK(cost_to_go(q, 2.0, set) == doctest::Approx(0.3 + 1.5 + 0.4 * 3.0));
}

TEST_CASE("aggregate cut below every value and at ties") {
    const AmbiguitySet set({0.5, 0.5}, 0.2);
    const std::vector<Vector> g{{1.0}, {1.0}};
    const Vector x_bar{0.0};
    const Vector below{1.0, 5.0};
    const Cut high_u = aggregate_cut(below, g, x_bar, 6.0, set);
    CHECK(high_u.coef_u == 0.0);
    CHECK(high_u.coef_x[0] == doctest::Approx(0.6));
    // Q_1 = u_bar is left out of the tail set; only Q_2 contributes.
    const Cut tie = aggregate_cut(below, g, x_bar, 1.0, set);
    CHECK(tie.coef_u == doctest::Approx(-0.4));
    CHECK(tie.coef_x[0] == doctest::Approx(0.6 + 0.4));
    CHECK(aggregate_cut(below, g, x_bar, 5.0, set).coef_u == 0.0);
}

TEST_CASE("pool evaluation") {
    CutPool pool(2);
    const Vector x{1.0, 2.0};
    CHECK(evaluate_pool(pool, x, 0.0) == 0.0);
    pool.add({1.0, {1.0, 0.0}, -1.0});
    CHECK(evaluate_pool(pool, x, 0.5) == doctest::Approx(1.5));
    const double before = evaluate_pool(pool, x, 3.0);
    pool.add({-1.0, {0.0, 1.0}, 0.0});
    CHECK(evaluate_pool(pool, x, 0.5) == doctest::Approx(1.5));
    CHECK(evaluate_pool(pool, x, 3.0) >= before);
    CHECK(evaluate_pool(pool, x, 3.0) == doctest::Approx(1.0));
    CHECK_THROWS_AS(pool.add({0.0, {1.0}, 0.0}), Error);
    CHECK_THROWS_AS(pool.add({0.0, {1.0, 1.0}, 0.5}), Error);
    CHECK_THROWS_AS(pool.add({std::nan(""), {1.0, 1.0}, 0.0}), Error);
}

TEST_CASE("property: adding cuts never lowers the pool") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    CutPool pool(3);
    std::vector<Vector> probes;
    for (int p = 0; p < 50; ++p) probes.push_back({n(rng), n(rng), n(rng), std::abs(n(rng))});
    std::vector<double> last(probes.size(), 0.0);
    for (int k = 0; k < 40; ++k) {
        pool.add({n(rng), {n(rng), n(rng), n(rng)}, -std::abs(n(rng))});
        for (std::size_t p = 0; p < probes.size(); ++p) {
            const double v = evaluate_pool(pool, std::span<const double>(probes[p].data(), 3), probes[p][3]);
            CHECK(v >= last[p]);
            last[p] = v;
        }
    }
}

TEST_CASE("property: central differences match the scenario subgradient") {
    const HydroConfig cfg = small_hydro();
    const StageTemplate stage = hydro_stage_template(cfg, 2, 0.0);
    const HydroLayout L{1, 1};
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> storage(20.0, 200.0);
    std::uniform_real_distribution<double> inflow(0.0, 120.0);
    const double eps = 1e-6;
    int checked = 0;
    for (int trial = 0; trial < 400 && checked < 100; ++trial) {
        StageTemplate t = hydro_stage_template(cfg, 2, inflow(rng));
        Vector x(L.size(), 0.0);
        x[L.storage(0)] = storage(rng);
        const StageSolution sol = solve_stage(t, 0, x, nullptr, 1.0);
        const Vector g = scenario_subgradient(sol, t.scenarios[0].B);
        Vector hi = x, lo = x;
        hi[L.storage(0)] += eps;
        lo[L.storage(0)] -= eps;
        const double up = solve_stage(t, 0, hi, nullptr, 1.0).objective;
        const double down = solve_stage(t, 0, lo, nullptr, 1.0).objective;
        // Kinks show up as differing one-sided slopes; skip those points.
        const double right = (up - sol.objective) / eps, left = (sol.objective - down) / eps;
        if (std::abs(right - left) > 1e-4 * (1.0 + std::abs(right))) continue;
        ++checked;
        CHECK(std::abs((up - down) / (2 * eps) - g[L.storage(0)]) <= 1e-5 * (1.0 + std::abs(g[L.storage(0)])));
        for (std::size_t j = 0; j < g.size(); ++j) {
            if (j != L.storage(0)) CHECK(g[j] == 0.0);
        }
    }
    CHECK(checked >= 100);
    (void)stage;
}

TEST_CASE("property: aggregated cuts under-estimate cost-to-go and are tight") {
    const HydroConfig cfg = small_hydro();
    Lattice lattice;
    lattice.horizon = 2;
    lattice.stages.push_back({{0.0, 20.0, 50.0, 90.0}, {0.25, 0.25, 0.25, 0.25}, {10.0, 35.0, 70.0}, 16});
    const auto templates = build_hydro_templates(cfg, lattice, 1.96);
    const StageTemplate& stage2 = templates[1];
    const AmbiguitySet& set = stage2.ambiguity;
    CHECK(set.radius() == doctest::Approx(1.96 * std::sqrt(0.1875) / 4.0));
    const HydroLayout L{1, 1};
    const std::size_t S = stage2.num_scenarios();

    auto values_at = [&](const Vector& x) {
        Vector q(S);
        for (std::size_t i = 0; i < S; ++i) q[i] = solve_stage(stage2, i, x, nullptr, 1.0).objective;
        return q;
    };
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> storage(20.0, 200.0);
    std::uniform_real_distribution<double> risk(0.0, 200.0 * 1000.0);
    for (int k = 0; k < 20; ++k) {
        Vector x_bar(L.size(), 0.0);
        x_bar[L.storage(0)] = storage(rng);
        const double u_bar = k % 4 == 0 ? 0.0 : risk(rng) / 10.0;
        Vector q(S);
        std::vector<Vector> g(S);
        for (std::size_t i = 0; i < S; ++i) {
            const StageSolution sol = solve_stage(stage2, i, x_bar, nullptr, 1.0);
            q[i] = sol.objective;
            g[i] = scenario_subgradient(sol, stage2.scenarios[i].B);
        }
        const Cut cut = aggregate_cut(q, g, x_bar, u_bar, set);
        CHECK(cut.coef_u <= 0.0);
        const double anchor = cost_to_go(q, u_bar, set);
        CHECK(std::abs(cut.evaluate(x_bar, u_bar) - anchor) <= 1e-7 * (1.0 + std::abs(anchor)));
        for (int p = 0; p < 50; ++p) {
            Vector x(L.size(), 0.0);
            x[L.storage(0)] = storage(rng);
            const double u = risk(rng) / 10.0;
            CHECK(cut.evaluate(x, u) <= cost_to_go(values_at(x), u, set) + 1e-6);
        }
    }
}

TEST_CASE("policy json round trip") {
    PolicyDocument doc;
    doc.pools.emplace_back(2);
    doc.pools.back().add({1.5, {0.25, -3.0}, -0.5});
    doc.pools.back().add({-2.0, {1e-17, 4e9}, 0.0});
    doc.pools.emplace_back(2, 0.0);
    doc.mass_lower = {0.8, 0.9};
    doc.mass_upper = {1.2, 1.1};
    const PolicyDocument back = policy_from_json(policy_to_json(doc));
    REQUIRE(back.pools.size() == 2);
    REQUIRE(back.pools[0].size() == 2);
    CHECK(back.pools[0].cuts()[1].coef_x == doc.pools[0].cuts()[1].coef_x);
    CHECK(back.pools[0].cuts()[0].intercept == 1.5);
    CHECK(back.pools[1].empty());
    CHECK(back.mass_lower == doc.mass_lower);
    CHECK(back.mass_upper == doc.mass_upper);
    CHECK_THROWS_AS(policy_from_json("{\"format\": \"other\"}"), Error);
    CHECK_THROWS_AS(policy_from_json("not json"), Error);
}
