#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace drsddp {

/// L-infinity ball of radius d around a reference distribution f0,
/// intersected with the probability simplex.
///
/// Bounds are clamped to [0, 1]; since every member of the set is
/// nonnegative this does not change the set. Immutable after construction.
class AmbiguitySet {
public:
    /// Throws Error(InvalidDistribution) unless f0 is on the simplex
    /// (sum within 1e-12, entries nonnegative) and radius >= 0.
    AmbiguitySet(std::vector<double> reference, double radius);

    std::size_t support_size() const noexcept { return reference_.size(); }
    const std::vector<double>& reference() const noexcept { return reference_; }
    double radius() const noexcept { return radius_; }
    const std::vector<double>& lower() const noexcept { return lower_; }
    const std::vector<double>& upper() const noexcept { return upper_; }
    double mass_lower() const noexcept { return mass_lower_; }
    double mass_upper() const noexcept { return mass_upper_; }

    /// (upper - lower): the unnormalised tail measure.
    const std::vector<double>& spread() const noexcept { return spread_; }

    /// True when the set is the singleton {f0} (the tail measure is empty).
    bool is_singleton() const noexcept { return mass_upper_ - mass_lower_ <= 0.0; }

    /// Normalised tail weights q = spread / (P_hi - P_lo). Empty for a singleton.
    std::vector<double> tail_weights() const;

    /// CVaR level beta = (P_hi - 1) / (P_hi - P_lo) of the tail measure.
    double cvar_level() const;

private:
    std::vector<double> reference_;
    double radius_;
    std::vector<double> lower_;
    std::vector<double> upper_;
    std::vector<double> spread_;
    double mass_lower_ = 0.0;
    double mass_upper_ = 0.0;
};

/// Data-driven radius  d = max_r z * sqrt(f0_r (1 - f0_r)) / sqrt(N).
double radius_from_samples(std::span<const double> reference, std::size_t sample_count, double z_half_alpha);

/// Set with the data-driven radius above. N >= 1, z >= 0.
AmbiguitySet build_ambiguity(std::span<const double> reference, std::size_t sample_count, double z_half_alpha);

/// inf_u { u + 1/(1-beta) * sum_r q_r [Z_r - u]^+ }, evaluated on the sorted
/// support where the infimum is attained. Throws Error(InvalidLevel) for
/// beta outside [0, 1).
double cvar(std::span<const double> values, std::span<const double> weights, double beta);

/// sup over the set of sum_r f_r Q_r, via the closed form
///   sum f_lo,r Q_r + (1 - P_lo) * CVaR_beta^q [Q].
/// Throws Error(DegenerateSet) when the set is empty (P_hi = P_lo != 1).
double worst_case_expectation(std::span<const double> values, const AmbiguitySet& set);

}  // namespace drsddp
