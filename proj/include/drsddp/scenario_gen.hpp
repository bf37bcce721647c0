#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace drsddp {

enum class DistributionKind { Lognormal, TruncatedNormal, Weibull, Exponential };

std::string_view to_string(DistributionKind kind);

/// Accepts "lognormal", "truncated-normal" (alias "normal"), "weibull",
/// "exponential". Throws Error(InvalidParameters) otherwise.
DistributionKind parse_distribution_kind(std::string_view name);

/// Inflow distribution with nonnegative support.
///
///   Lognormal        a = log-mean, b = log-sd
///   TruncatedNormal  a = location, b = scale; truncated to [0, inf)
///   Weibull          a = shape,    b = scale
///   Exponential      a = rate
struct TrueDistribution {
    DistributionKind kind = DistributionKind::Exponential;
    double a = 1.0;
    double b = 0.0;

    static TrueDistribution lognormal(double log_mean, double log_sd);
    static TrueDistribution truncated_normal(double location, double scale);
    static TrueDistribution weibull(double shape, double scale);
    static TrueDistribution exponential(double rate);

    /// Default family member with the given mean: lognormal with log-sd 0.5,
    /// normal with scale mean/2, Weibull with shape 1.5, exponential.
    static TrueDistribution with_mean(DistributionKind kind, double mean);

    /// Throws Error(InvalidParameters) for out-of-domain parameters.
    void validate() const;

    double mean() const;
    double cdf(double x) const;
    /// Inverse CDF on (0, 1).
    double quantile(double p) const;
};

/// Deterministic generator for substream `stream` of `seed`. The pair is
/// mixed through SplitMix64 and seeds a 64-bit Mersenne Twister, whose
/// output sequence is fixed by the C++ standard.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// Uniform draw on the open interval (0, 1) from 53 random bits.
double uniform_open(std::mt19937_64& rng);

/// n i.i.d. draws by inverse-CDF sampling on substream 0 of `seed`.
std::vector<double> sample_true(const TrueDistribution& dist, std::size_t n, std::uint64_t seed);
std::vector<double> sample_true(const TrueDistribution& dist, std::size_t n, std::mt19937_64& rng);

/// Finite support for one stage. Values strictly increase; edges[k] separates
/// scenario k from scenario k+1 (midpoint between neighbouring samples).
struct StageSupport {
    std::vector<double> values;
    std::vector<double> f0;
    std::vector<double> edges;
    std::size_t sample_count = 0;

    std::size_t size() const noexcept { return values.size(); }
};

/// Equal-count quantile bins over the sorted samples; each value is its bin
/// mean and f0 is count / total. Adjacent bins with equal means are merged,
/// so the result may have fewer than S scenarios when samples repeat.
/// Throws Error(InsufficientData) if S is 0 or exceeds the sample count.
StageSupport build_stage_support(std::span<const double> samples, std::size_t S);

/// Stagewise-independent supports for stages 2..T; stage 1 is deterministic.
struct Lattice {
    std::size_t horizon = 0;
    std::vector<StageSupport> stages;  // stages[t - 2] is stage t

    const StageSupport& stage(std::size_t t) const { return stages.at(t - 2); }
};

/// Stage t draws its N samples from substream t of `seed`.
Lattice build_lattice(const TrueDistribution& dist, std::size_t T, std::size_t N, std::size_t S, std::uint64_t seed);

/// Historical samples: one column per stage, header row of stage indices.
struct SampleTable {
    std::vector<std::size_t> stage_index;
    std::vector<std::vector<double>> columns;
};

/// Throws Error(IoError) when the file is unreadable, Error(InvalidInput) on
/// malformed content. Empty cells are allowed (ragged columns).
SampleTable read_sample_csv(const std::filesystem::path& path);
SampleTable parse_sample_csv(std::string_view text);

/// Lattice from a table whose stage indices are exactly 2..T.
Lattice lattice_from_table(const SampleTable& table, std::size_t S);

}  // namespace drsddp
