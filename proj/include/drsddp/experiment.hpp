#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "drsddp/hydro_model.hpp"
#include "drsddp/scenario_gen.hpp"
#include "drsddp/sddp_engine.hpp"

namespace drsddp {

struct ExperimentSpec {
    std::vector<DistributionKind> distributions{DistributionKind::TruncatedNormal};
    std::vector<std::size_t> sample_sizes{10, 100, 1000, 9000};
    std::size_t scenarios = 12;  // S
    std::size_t horizon = 12;    // T; ignored when `hydro` is set
    double epsilon = 0.05;
    std::size_t max_iterations = 300;
    std::size_t paths = 6;       // M
    double alpha = 0.05;         // radius uses z_{alpha/2}
    std::uint64_t seed = 7;
    std::size_t calibration_samples = 100000;
    double mean_inflow = 2e5;      // MWh per stage
    double thermal_capacity = 2e5; // MWh per stage
    std::uint64_t cost_seed = 7;
    std::optional<HydroConfig> hydro;  // overrides the default system
    std::filesystem::path output_dir = ".";
    /// Writes 0 in every seconds column so repeated runs are byte-identical.
    bool deterministic_output = false;

    /// Throws Error(InvalidParameters) on nonpositive counts or epsilon,
    /// alpha outside (0, 1).
    void validate() const;
    double z_half_alpha() const;
    SddpConfig sddp_config() const;
    /// System for the given inflow law: the configured one, or the default
    /// with stage-1 inflow set to the distribution mean.
    HydroConfig hydro_for(const TrueDistribution& dist) const;
};

struct GapRow {
    DistributionKind distribution;
    std::size_t N = 0;
    double gap = 0.0;
    std::size_t steps = 0;
    double z_a = 0.0;
    double z_n = 0.0;
    double seconds = 0.0;
};

struct CellResult {
    RunResult run;
    MultistageProblem problem;
    double seconds = 0.0;
};

/// One SDDP run on a lattice built from the given inflow law.
CellResult solve_cell(const ExperimentSpec& spec, const TrueDistribution& dist, const Lattice& lattice, bool risk_neutral);

/// Lattice with S scenarios per stage from N draws; S is capped at N so
/// tiny samples still give a support.
Lattice study_lattice(const ExperimentSpec& spec, const TrueDistribution& dist, std::size_t N);

/// Lattice from `calibration_samples` draws on a seed disjoint from the study
/// lattices; its risk-neutral optimum stands in for the true-distribution value.
Lattice calibration_lattice(const ExperimentSpec& spec, const TrueDistribution& dist);

/// Gap = (Z_a - Z_n) / Z_n per (distribution, N); Z_a and Z_n are terminal
/// lower bounds. Writes gap_table.csv into the output directory.
std::vector<GapRow> run_consistency_study(const ExperimentSpec& spec);

/// Risk-averse run for one (distribution, N); writes trace.csv.
std::vector<RunRecord> run_convergence_trace(const ExperimentSpec& spec, DistributionKind kind, std::size_t N);

std::string gap_table_csv(const std::vector<GapRow>& rows, bool deterministic);
std::string trace_csv(const std::vector<RunRecord>& records, bool deterministic);
/// k, lower_bound, upper_bound, gap, seconds.
std::string run_records_csv(const std::vector<RunRecord>& records, bool deterministic);

/// Simulated policy cost on fresh inflow draws.
struct Evaluation {
    std::vector<double> path_costs;
    double mean = 0.0;
    double stddev = 0.0;
};

/// Simulates `simulations` paths with inflows sampled directly from `dist`
/// (stage 1 uses the configured first-stage inflow), solving each stage
/// against the policy's pools. Throws Error(DimensionMismatch) when the
/// policy does not fit the system.
Evaluation evaluate_policy(const HydroConfig& cfg, const PolicyDocument& policy, const TrueDistribution& dist,
                           std::size_t simulations, std::uint64_t seed);

/// Writes `contents` to `path` through a temporary file and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace drsddp
