#pragma once

// Seeded hydro instances with small magnitudes (costs and storages of order
// 1 to 1e4) so absolute tolerances such as 1e-6 stay meaningful.

#include <algorithm>
#include <cstdint>

#include "drsddp/hydro_model.hpp"
#include "drsddp/scenario_gen.hpp"
#include "drsddp/sddp_engine.hpp"

namespace drsddp::testing {

inline HydroConfig small_hydro_config(std::size_t T, std::uint64_t seed) {
    HydroConfig cfg = default_hydro_config(T, 10.0, 6.0, seed);
    cfg.reservoirs[0] = {2.0, 20.0, 11.0, 1.0};
    return cfg;
}

inline MultistageProblem small_hydro_problem(std::size_t T, std::size_t S, std::size_t N, std::uint64_t seed,
                                             DistributionKind kind = DistributionKind::Lognormal) {
    const HydroConfig cfg = small_hydro_config(T, seed);
    const Lattice lattice = build_lattice(TrueDistribution::with_mean(kind, 6.0), T, N, S, seed);
    MultistageProblem problem;
    problem.stages = build_hydro_templates(cfg, lattice, 1.959963984540054);
    problem.initial_state = hydro_initial_state(cfg);
    problem.options.u_upper = cfg.value_bound();
    return problem;
}

}  // namespace drsddp::testing
