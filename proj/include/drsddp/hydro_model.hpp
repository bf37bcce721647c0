#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <vector>

#include "drsddp/cuts.hpp"
#include "drsddp/scenario_gen.hpp"

namespace drsddp {

struct ThermalUnit {
    double min_output = 0.0;  // MWh
    double max_output = 0.0;  // MWh
    Vector cost;              // $/MWh, one entry per stage
};

struct Reservoir {
    double min_storage = 1e5;      // MWh
    double max_storage = 1e6;      // MWh
    double initial_storage = 5.5e5;
    double inflow_share = 1.0;     // fraction of the scenario inflow reaching this reservoir
};

/// Hydrothermal system over T weekly stages.
struct HydroConfig {
    std::size_t T = 12;
    std::vector<ThermalUnit> thermal;
    std::vector<Reservoir> reservoirs;
    Vector demand;   // MWh per stage
    Vector penalty;  // $/MWh per stage
    double first_stage_inflow = 0.0;

    /// Throws Error(InvalidInput) on broken invariants and
    /// Error(InfeasibleConfig) when minimum thermal output exceeds demand.
    void validate() const;

    std::size_t num_variables() const noexcept { return thermal.size() + 3 * reservoirs.size() + 1; }
    /// Provable bound on any stage value: max unit cost times total demand.
    double value_bound() const;
};

/// Column positions in a stage decision vector
/// [x_g ..., (x_r, s_r, v_r) per reservoir, x_p].
struct HydroLayout {
    std::size_t thermal_count;
    std::size_t reservoir_count;

    std::size_t generation(std::size_t g) const { return g; }
    std::size_t release(std::size_t r) const { return thermal_count + 3 * r; }
    std::size_t spill(std::size_t r) const { return thermal_count + 3 * r + 1; }
    std::size_t storage(std::size_t r) const { return thermal_count + 3 * r + 2; }
    std::size_t shortfall() const { return thermal_count + 3 * reservoir_count; }
    std::size_t size() const { return shortfall() + 1; }
};

/// One reservoir and one thermal unit. Costs are uniform on [45, 85] drawn
/// from `cost_seed`; demand is 60% of thermal capacity plus mean inflow.
HydroConfig default_hydro_config(std::size_t T, double thermal_capacity, double mean_inflow, std::uint64_t cost_seed);

/// Reads the TOML configuration format documented in configs/hydro.toml.
/// Throws Error(ConfigError) on parse or schema errors, Error(IoError) when
/// the file is unreadable.
HydroConfig parse_hydro_config(std::string_view text);
HydroConfig read_hydro_config(const std::filesystem::path& path);

/// Stage templates for t = 1..T (index t - 1). Stage 1 has one scenario
/// with the configured first-stage inflow; stage t >= 2 has one scenario per
/// lattice value with the data-driven set built from f0, the stage sample
/// count and z_half_alpha.
std::vector<StageTemplate> build_hydro_templates(const HydroConfig& cfg, const Lattice& lattice, double z_half_alpha);

/// Single-scenario stage-t template for an arbitrary inflow (policy evaluation).
StageTemplate hydro_stage_template(const HydroConfig& cfg, std::size_t t, double inflow);

/// Initial state in stage-decision layout: storages set, everything else 0.
Vector hydro_initial_state(const HydroConfig& cfg);

}  // namespace drsddp
