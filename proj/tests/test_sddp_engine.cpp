#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "drsddp/error.hpp"
#include "drsddp/sddp_engine.hpp"
#include "instances.hpp"
#include "oracles.hpp"

using namespace drsddp;

namespace {

SddpConfig quick_config(std::uint64_t seed, std::size_t K = 100) {
    SddpConfig c;
    c.seed = seed;
    c.max_iterations = K;
    c.paths = 6;
    return c;
}

}  // namespace

TEST_CASE("stopping rule") {
    const std::vector<double> spread{1.0, 2.0};
    CHECK(should_stop(0.0, spread, 1.0, 0.05, 301, 300, 1.96));
    CHECK_FALSE(should_stop(1e9, spread, 1.0, 0.05, 0, 300, 1.96));
    const std::vector<double> flat{5.0, 5.0, 5.0};
    CHECK(should_stop(5.0, flat, 5.0, 0.0, 3, 300, 1.96));
    const std::vector<double> ten{1.1, 1.1};
    CHECK_FALSE(should_stop(1.1, ten, 1.0, 0.05, 3, 300, 1.96));
    CHECK(should_stop(1.1, ten, 1.0, 0.10 + 1e-12, 3, 300, 1.96));
    try {
        should_stop(1.0, ten, 0.0, 0.05, 3, 300, 1.96);
        FAIL("expected NonpositiveLowerBound");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NonpositiveLowerBound);
    }
    CHECK(should_stop(0.0, std::vector<double>{0.0, 0.0}, 0.0, 0.05, 3, 300, 1.96, 1e-6));
}

TEST_CASE("upper bound recursion by hand") {
    MultistageProblem p = testing::small_hydro_problem(2, 2, 50, 1);
    p.stages[1].ambiguity = AmbiguitySet({0.5, 0.5}, 0.1);  // Pl = 0.8, Pu = 1.2
    Trajectory path;
    path.steps.push_back({0, {}, 9.0, 0.0});
    path.steps.push_back({1, {}, 0.0, 10.0});
    const UpperBound one = upper_bound(p, {path});
    CHECK(one.path_costs[0] == doctest::Approx(0.8 * 10 + 0.2 * 9 + 0.4 * 1));
    path.steps[0].immediate_cost = 3.0;
    const UpperBound three = upper_bound(p, {path, path, path});
    CHECK(three.mean == doctest::Approx(13.2));
    CHECK(three.stddev <= 1e-12);
}

TEST_CASE("risk-neutral path costs are plain sums") {
    MultistageProblem p = risk_neutral_copy(testing::small_hydro_problem(4, 3, 40, 2));
    Trajectory path;
    double total = 0.0;
    for (int s = 0; s < 4; ++s) {
        path.steps.push_back({0, {}, 100.0 * (s + 1), 1.5 * s});
        total += 1.5 * s;
    }
    CHECK(upper_bound(p, {path}).path_costs[0] == total);
}

TEST_CASE("empty pools give the myopic first stage") {
    const MultistageProblem p = testing::small_hydro_problem(3, 4, 40, 3);
    const Policy policy = Policy::empty_for(p);
    const FirstStage first = solve_first_stage(p, policy);
    const StageSolution myopic = solve_stage(p.stages[0], 0, p.initial_state, nullptr, 1.0);
    CHECK(first.lower_bound == doctest::Approx(myopic.objective));
    // Spare water is free today when the future is invisible.
    CHECK(first.u == 0.0);
}

TEST_CASE("forward pass determinism and degenerate lattice") {
    const MultistageProblem p = testing::small_hydro_problem(4, 5, 60, 4);
    const Policy policy = Policy::empty_for(p);
    const FirstStage first = solve_first_stage(p, policy);
    const auto a = forward_pass(p, policy, first, 6, 77, 0);
    const auto b = forward_pass(p, policy, first, 6, 77, 0);
    REQUIRE(a.size() == 6);
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t s = 0; s < 4; ++s) {
            CHECK(a[i].steps[s].scenario == b[i].steps[s].scenario);
            CHECK(a[i].steps[s].x == b[i].steps[s].x);
        }
    }
    const MultistageProblem single = testing::small_hydro_problem(2, 1, 10, 4);
    const Policy sp = Policy::empty_for(single);
    const auto paths = forward_pass(single, sp, solve_first_stage(single, sp), 6, 123, 0);
    for (const auto& path : paths) CHECK(path.steps[1].x == paths[0].steps[1].x);
    CHECK_THROWS_AS(forward_pass(single, sp, solve_first_stage(single, sp), 1, 123, 0), Error);
}

TEST_CASE("backward pass adds one cut per path and stage and never lowers the pools") {
    const MultistageProblem p = testing::small_hydro_problem(4, 3, 40, 5);
    Policy policy = Policy::empty_for(p);
    const FirstStage first = solve_first_stage(p, policy);
    const auto paths = forward_pass(p, policy, first, 6, 9, 0);
    std::vector<double> before;
    for (const auto& path : paths) {
        for (std::size_t s = 0; s + 1 < 4; ++s) before.push_back(policy.future[s].evaluate(path.steps[s].x, path.steps[s].u));
    }
    backward_pass(p, policy, paths);
    std::size_t k = 0;
    for (const auto& path : paths) {
        for (std::size_t s = 0; s + 1 < 4; ++s) CHECK(policy.future[s].evaluate(path.steps[s].x, path.steps[s].u) >= before[k++]);
    }
    for (const auto& pool : policy.future) CHECK(pool.size() == 6);
    for (const auto& pool : policy.future) {
        for (const auto& cut : pool.cuts()) CHECK(cut.coef_u <= 0.0);
    }
}

TEST_CASE("two-stage oracle routes agree") {
    const MultistageProblem p = testing::small_hydro_problem(2, 6, 30, 6);
    const double exact = oracle::two_stage_extensive_optimum(p);
    const double grid = oracle::two_stage_grid_search(p);
    CHECK(std::abs(grid - exact) <= 1e-6 * (1.0 + std::abs(exact)));
}

TEST_CASE("two-stage run reaches the brute-force optimum with valid bounds") {
    for (std::uint64_t seed : {11u, 12u}) {
        const MultistageProblem p = testing::small_hydro_problem(2, 6, 30, seed);
        const double optimum = oracle::two_stage_extensive_optimum(p);
        SddpConfig c = quick_config(seed);
        c.epsilon = 1e-9;  // run to the iteration cap
        c.max_iterations = 40;
        const RunResult r = run(p, c);
        for (const auto& rec : r.history) CHECK(rec.lower <= optimum + 1e-6);
        CHECK(std::abs(r.first_stage.lower_bound - optimum) <= 1e-4 * std::abs(optimum));
    }
}

TEST_CASE("lower bound is nondecreasing and runs are deterministic") {
    const MultistageProblem p = testing::small_hydro_problem(3, 4, 40, 8);
    const RunResult a = run(p, quick_config(3, 30));
    const RunResult b = run(p, quick_config(3, 30));
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t k = 0; k < a.history.size(); ++k) {
        CHECK(a.history[k].lower == b.history[k].lower);
        CHECK(a.history[k].upper == b.history[k].upper);
        CHECK(a.history[k].path_costs == b.history[k].path_costs);
        if (k > 0) CHECK(a.history[k].lower >= a.history[k - 1].lower - 1e-12 * std::abs(a.history[k].lower));
    }
    CHECK(a.steps <= 31);
}

TEST_CASE("zero radius everywhere matches the risk-neutral mode") {
    const MultistageProblem p = testing::small_hydro_problem(3, 4, 40, 9);
    const RunResult flagged = [&] {
        SddpConfig c = quick_config(4, 20);
        c.risk_neutral = true;
        return run(p, c);
    }();
    const RunResult copied = run(risk_neutral_copy(p), quick_config(4, 20));
    REQUIRE(flagged.history.size() == copied.history.size());
    CHECK(flagged.history.back().lower == copied.history.back().lower);
}

TEST_CASE("iteration limit and error context") {
    const MultistageProblem p = testing::small_hydro_problem(3, 4, 40, 10);
    SddpConfig c = quick_config(1, 2);
    c.epsilon = 1e-12;
    const RunResult r = run(p, c);
    CHECK(r.steps == 3);
    CHECK_FALSE(r.converged);
    CHECK(r.history.size() == 3);

    MultistageProblem broken = p;
    broken.stages[2].upper[0] = 0.0;
    broken.stages[2].lower[0] = 0.0;
    broken.stages[2].scenarios[0].A(0, 4) = 0.0;  // no shortfall slack in scenario 0
    broken.stages[2].lower[3] = 20.0;             // storage pinned high
    bool thrown = false;
    try {
        run(broken, quick_config(1, 50));
    } catch (const Error& e) {
        thrown = true;
        CHECK(e.code() == ErrorCode::StageInfeasible);
        CHECK(std::string(e.what()).find("iteration 0") != std::string::npos);
    }
    CHECK(thrown);
    SddpConfig bad;
    bad.paths = 1;
    CHECK_THROWS_AS(run(p, bad), Error);
}
