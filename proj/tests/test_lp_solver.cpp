#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "drsddp/error.hpp"
#include "drsddp/lp_solver.hpp"
#include "oracles.hpp"
#include "random_lp.hpp"

using namespace drsddp;

namespace {

LinearProgram one_variable(double cost) {
    LinearProgram lp(1);
    lp.objective()[0] = cost;
    return lp;
}

}  // namespace

TEST_CASE("identity: min x s.t. x >= 1") {
    LinearProgram lp = one_variable(1.0);
    const double row[] = {1.0};
    lp.add_constraint(row, Relation::GreaterEqual, 1.0);
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.primal[0] == doctest::Approx(1.0));
    CHECK(sol.duals[0] == doctest::Approx(1.0));
    CHECK(sol.objective == doctest::Approx(1.0));
}

TEST_CASE("two-variable simplex corner") {
    // Vertices (0,0), (1,0), (0,1): objective values 0, -1, -1.
    LinearProgram lp(2);
    lp.objective() = {-1.0, -1.0};
    const double row[] = {-1.0, -1.0};
    lp.add_constraint(row, Relation::GreaterEqual, -1.0);
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-1.0));
    CHECK(oracle::vertex_oracle(lp) == doctest::Approx(-1.0));
}

TEST_CASE("contradictory constraints are infeasible") {
    LinearProgram lp = one_variable(1.0);
    const double pos[] = {1.0};
    const double neg[] = {-1.0};
    lp.add_constraint(pos, Relation::GreaterEqual, 1.0);
    lp.add_constraint(neg, Relation::GreaterEqual, 0.0);
    CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded ray") {
    LinearProgram lp = one_variable(-1.0);
    CHECK(solve_lp(lp).status == LpStatus::Unbounded);

    // Free variable, no constraints.
    LinearProgram free_lp = one_variable(1.0);
    free_lp.set_bounds(0, -kInfinity, kInfinity);
    CHECK(solve_lp(free_lp).status == LpStatus::Unbounded);
}

TEST_CASE("infeasible and unbounded-looking objective is still infeasible") {
    LinearProgram lp = one_variable(-1.0);
    const double row[] = {1.0};
    lp.set_bounds(0, 0.0, 1.0);
    lp.add_constraint(row, Relation::GreaterEqual, 2.0);
    CHECK(solve_lp(lp).status == LpStatus::Infeasible);
}

TEST_CASE("singleton feasible set") {
    LinearProgram lp = one_variable(1.0);
    const double row[] = {1.0};
    lp.add_constraint(row, Relation::Equal, 3.0);
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(3.0));
    CHECK(oracle::vertex_oracle(lp) == doctest::Approx(3.0));
}

TEST_CASE("equality rows, free variables and upper bounds") {
    // min 2a - b + c,  a + b + c = 4,  a - c >= -1,  a free, b and c boxed.
    LinearProgram lp(3);
    lp.objective() = {2.0, -1.0, 1.0};
    lp.set_bounds(0, -kInfinity, kInfinity);
    lp.set_bounds(1, -2.0, 3.0);
    lp.set_bounds(2, 0.0, 5.0);
    const double r1[] = {1.0, 1.0, 1.0};
    const double r2[] = {1.0, 0.0, -1.0};
    lp.add_constraint(r1, Relation::Equal, 4.0);
    lp.add_constraint(r2, Relation::GreaterEqual, -1.0);
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    // The oracle needs a bounded region; this box is inactive at the optimum.
    lp.set_bounds(0, -100.0, 100.0);
    CHECK(sol.objective == doctest::Approx(oracle::vertex_oracle(lp)).epsilon(1e-10));
}

TEST_CASE("malformed programs are rejected") {
    LinearProgram lp = one_variable(1.0);
    const double wide[] = {1.0, 2.0};
    CHECK_THROWS_AS(lp.add_constraint(wide, Relation::GreaterEqual, 0.0), Error);
    lp.objective()[0] = std::nan("");
    CHECK_THROWS_AS(solve_lp(lp), Error);
    LinearProgram bad_bounds = one_variable(1.0);
    bad_bounds.set_bounds(0, 2.0, 1.0);
    CHECK_THROWS_AS(solve_lp(bad_bounds), Error);
}

TEST_CASE("vertex oracle caps") {
    LinearProgram big(13);
    CHECK_THROWS_AS(oracle::vertex_oracle(big), Error);
    LinearProgram lp = one_variable(1.0);
    const double row[] = {1.0};
    lp.set_bounds(0, 0.0, 1.0);
    lp.add_constraint(row, Relation::GreaterEqual, 2.0);
    try {
        oracle::vertex_oracle(lp);
        FAIL("expected Infeasible");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Infeasible);
    }
}

TEST_CASE("zero equality row is redundant") {
    LinearProgram lp(2);
    lp.objective() = {1.0, -1.0};
    lp.set_bounds(0, -1.0, 0.0);
    lp.set_bounds(1, -3.0, 2.0);
    const double zero[] = {0.0, 0.0}, a[] = {-3.0, 0.0}, b[] = {2.0, 4.0};
    lp.add_constraint(zero, Relation::Equal, 0.0);
    lp.add_constraint(a, Relation::GreaterEqual, -2.0);
    lp.add_constraint(b, Relation::GreaterEqual, 1.0);
    const LpSolution sol = solve_lp(lp);
    REQUIRE(sol.status == LpStatus::Optimal);
    CHECK(sol.objective == doctest::Approx(-3.0));
    CHECK(oracle::vertex_oracle(lp) == doctest::Approx(-3.0));
}

TEST_CASE("warm start from a previous basis with appended rows") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        LinearProgram lp = testing::random_bounded_lp(rng, 4, 3);
        const LpSolution first = solve_lp(lp);
        if (first.status != LpStatus::Optimal) continue;
        std::vector<double> row(lp.num_variables(), 0.0);
        row[trial % lp.num_variables()] = 1.0;
        lp.add_constraint(row, Relation::GreaterEqual, first.primal[trial % lp.num_variables()] + 0.5);
        const LpSolution cold = solve_lp(lp);
        const LpSolution warm = solve_lp(lp, &first.basis);
        REQUIRE(cold.status == warm.status);
        if (cold.status == LpStatus::Optimal) {
            CHECK(warm.objective == doctest::Approx(cold.objective).epsilon(1e-9));
        }
    }
}

TEST_CASE("property: random LPs agree with vertex enumeration") {
    std::mt19937_64 rng(20240601);
    int optimal = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + trial % 4;
        const std::size_t m = 1 + (trial / 4) % 6;
        const LinearProgram lp = testing::random_bounded_lp(rng, n, m);
        const LpSolution sol = solve_lp(lp);
        double expected = 0.0;
        bool oracle_feasible = true;
        try {
            expected = oracle::vertex_oracle(lp);
        } catch (const Error& e) {
            REQUIRE(e.code() == ErrorCode::Infeasible);
            oracle_feasible = false;
        }
        if (!oracle_feasible) {
            CHECK(sol.status == LpStatus::Infeasible);
            continue;
        }
        REQUIRE(sol.status == LpStatus::Optimal);
        ++optimal;
        CHECK(std::abs(sol.objective - expected) <= 1e-8 * (1.0 + std::abs(expected)));
        CHECK(testing::complementary_slackness(lp, sol) <= 1e-7 * (1.0 + std::abs(sol.objective)));
        CHECK(testing::max_primal_violation(lp, sol) <= 1e-9 * (1.0 + std::abs(sol.objective)));
    }
    CHECK(optimal > 500);
}

TEST_CASE("determinism: identical input gives bitwise identical output") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const LinearProgram lp = testing::random_bounded_lp(rng, 5, 4);
        const LpSolution a = solve_lp(lp);
        const LpSolution b = solve_lp(lp);
        CHECK(a.status == b.status);
        CHECK(a.objective == b.objective);
        CHECK(a.primal == b.primal);
    }
}
