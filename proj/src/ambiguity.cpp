#include "drsddp/ambiguity.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "drsddp/error.hpp"

namespace drsddp {
namespace {

constexpr double kSimplexTol = 1e-12;

void check_simplex(std::span<const double> f) {
    if (f.empty()) throw Error(ErrorCode::InvalidDistribution, "ambiguity", "empty distribution");
    double sum = 0.0;
    for (double v : f) {
        if (!std::isfinite(v) || v < 0.0) {
            throw Error(ErrorCode::InvalidDistribution, "ambiguity", "negative or non-finite probability");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > kSimplexTol) {
        throw Error(ErrorCode::InvalidDistribution, "ambiguity", "probabilities sum to " + std::to_string(sum));
    }
}

}  // namespace

AmbiguitySet::AmbiguitySet(std::vector<double> reference, double radius)
    : reference_(std::move(reference)), radius_(radius) {
    check_simplex(reference_);
    if (!std::isfinite(radius_) || radius_ < 0.0) {
        throw Error(ErrorCode::InvalidDistribution, "ambiguity", "radius must be finite and >= 0");
    }
    const std::size_t r = reference_.size();
    lower_.resize(r);
    upper_.resize(r);
    spread_.resize(r);
    for (std::size_t k = 0; k < r; ++k) {
        lower_[k] = std::max(reference_[k] - radius_, 0.0);
        upper_[k] = std::min(reference_[k] + radius_, 1.0);
        spread_[k] = upper_[k] - lower_[k];
    }
    mass_lower_ = std::accumulate(lower_.begin(), lower_.end(), 0.0);
    mass_upper_ = std::accumulate(upper_.begin(), upper_.end(), 0.0);
    if (radius_ == 0.0) {
        mass_lower_ = 1.0;
        mass_upper_ = 1.0;
    }
}

std::vector<double> AmbiguitySet::tail_weights() const {
    if (is_singleton()) return {};
    const double total = mass_upper_ - mass_lower_;
    std::vector<double> q(spread_.size());
    for (std::size_t k = 0; k < q.size(); ++k) q[k] = spread_[k] / total;
    return q;
}

double AmbiguitySet::cvar_level() const {
    if (is_singleton()) return 0.0;
    return std::max(0.0, (mass_upper_ - 1.0) / (mass_upper_ - mass_lower_));
}

double radius_from_samples(std::span<const double> reference, std::size_t sample_count, double z_half_alpha) {
    check_simplex(reference);
    if (sample_count == 0) throw Error(ErrorCode::InvalidParameters, "ambiguity", "sample count must be >= 1");
    if (!(z_half_alpha >= 0.0) || !std::isfinite(z_half_alpha)) {
        throw Error(ErrorCode::InvalidParameters, "ambiguity", "z-score must be finite and >= 0");
    }
    double d = 0.0;
    for (double f : reference) d = std::max(d, z_half_alpha * std::sqrt(f * (1.0 - f)));
    return d / std::sqrt(static_cast<double>(sample_count));
}

AmbiguitySet build_ambiguity(std::span<const double> reference, std::size_t sample_count, double z_half_alpha) {
    const double d = radius_from_samples(reference, sample_count, z_half_alpha);
    return AmbiguitySet(std::vector<double>(reference.begin(), reference.end()), d);
}

double cvar(std::span<const double> values, std::span<const double> weights, double beta) {
    if (!(beta >= 0.0 && beta < 1.0)) {
        throw Error(ErrorCode::InvalidLevel, "ambiguity", "CVaR level must lie in [0, 1)");
    }
    if (values.size() != weights.size() || values.empty()) {
        throw Error(ErrorCode::DimensionMismatch, "ambiguity", "values and weights differ in length");
    }
    const std::size_t r = values.size();
    std::vector<std::size_t> order(r);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    // Suffix sums over the sorted support: sum q Z and sum q for entries above u.
    std::vector<double> tail_mass(r + 1, 0.0), tail_first_moment(r + 1, 0.0);
    for (std::size_t k = r; k-- > 0;) {
        tail_mass[k] = tail_mass[k + 1] + weights[order[k]];
        tail_first_moment[k] = tail_first_moment[k + 1] + weights[order[k]] * values[order[k]];
    }
    const double scale = 1.0 / (1.0 - beta);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < r; ++k) {
        const double u = values[order[k]];
        std::size_t above = k + 1;
        while (above < r && values[order[above]] == u) ++above;
        const double excess = tail_first_moment[above] - u * tail_mass[above];
        best = std::min(best, u + scale * excess);
        k = above - 1;
    }
    return best;
}

double worst_case_expectation(std::span<const double> values, const AmbiguitySet& set) {
    if (values.size() != set.support_size()) {
        throw Error(ErrorCode::DimensionMismatch, "ambiguity", "value vector does not match support");
    }
    double base = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) base += set.lower()[k] * values[k];
    if (set.is_singleton()) {
        if (std::abs(set.mass_lower() - 1.0) > 1e-12) {
            throw Error(ErrorCode::DegenerateSet, "ambiguity", "P_hi == P_lo but mass is not 1");
        }
        return base;
    }
    const std::vector<double> q = set.tail_weights();
    return base + (1.0 - set.mass_lower()) * cvar(values, q, set.cvar_level());
}

}  // namespace drsddp
