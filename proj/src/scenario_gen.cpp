#include "drsddp/scenario_gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/lognormal.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/weibull.hpp>

#include "drsddp/error.hpp"

namespace drsddp {
namespace {

namespace bm = boost::math;

[[noreturn]] void fail(ErrorCode code, const std::string& msg) { throw Error(code, "scenario_gen", msg); }

bool positive(double v) { return std::isfinite(v) && v > 0.0; }

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

std::string_view to_string(DistributionKind kind) {
    switch (kind) {
        case DistributionKind::Lognormal: return "lognormal";
        case DistributionKind::TruncatedNormal: return "truncated-normal";
        case DistributionKind::Weibull: return "weibull";
        case DistributionKind::Exponential: return "exponential";
    }
    return "unknown";
}

DistributionKind parse_distribution_kind(std::string_view name) {
    if (name == "lognormal") return DistributionKind::Lognormal;
    if (name == "truncated-normal" || name == "normal") return DistributionKind::TruncatedNormal;
    if (name == "weibull") return DistributionKind::Weibull;
    if (name == "exponential") return DistributionKind::Exponential;
    fail(ErrorCode::InvalidParameters, "unknown distribution '" + std::string(name) + "'");
}

TrueDistribution TrueDistribution::lognormal(double log_mean, double log_sd) {
    return {DistributionKind::Lognormal, log_mean, log_sd};
}
TrueDistribution TrueDistribution::truncated_normal(double location, double scale) {
    return {DistributionKind::TruncatedNormal, location, scale};
}
TrueDistribution TrueDistribution::weibull(double shape, double scale) {
    return {DistributionKind::Weibull, shape, scale};
}
TrueDistribution TrueDistribution::exponential(double rate) { return {DistributionKind::Exponential, rate, 0.0}; }

TrueDistribution TrueDistribution::with_mean(DistributionKind kind, double mean) {
    if (!positive(mean)) fail(ErrorCode::InvalidParameters, "mean must be positive");
    switch (kind) {
        case DistributionKind::Lognormal: return lognormal(std::log(mean) - 0.125, 0.5);
        case DistributionKind::TruncatedNormal: return truncated_normal(mean, 0.5 * mean);
        case DistributionKind::Weibull: return weibull(1.5, mean / std::tgamma(1.0 + 1.0 / 1.5));
        case DistributionKind::Exponential: return exponential(1.0 / mean);
    }
    fail(ErrorCode::InvalidParameters, "unknown distribution kind");
}

void TrueDistribution::validate() const {
    switch (kind) {
        case DistributionKind::Lognormal:
            if (!std::isfinite(a) || !positive(b)) fail(ErrorCode::InvalidParameters, "lognormal needs finite log-mean, log-sd > 0");
            return;
        case DistributionKind::TruncatedNormal:
            if (!std::isfinite(a) || !positive(b)) fail(ErrorCode::InvalidParameters, "normal needs finite location, scale > 0");
            // Truncation mass too small to sample in double precision.
            if (a / b < -30.0) fail(ErrorCode::InvalidParameters, "normal location too far below zero");
            return;
        case DistributionKind::Weibull:
            if (!positive(a) || !positive(b)) fail(ErrorCode::InvalidParameters, "weibull needs shape, scale > 0");
            return;
        case DistributionKind::Exponential:
            if (!positive(a)) fail(ErrorCode::InvalidParameters, "exponential needs rate > 0");
            return;
    }
    fail(ErrorCode::InvalidParameters, "unknown distribution kind");
}

double TrueDistribution::mean() const {
    validate();
    switch (kind) {
        case DistributionKind::Lognormal: return std::exp(a + 0.5 * b * b);
        case DistributionKind::TruncatedNormal: {
            const double alpha = -a / b;
            const bm::normal_distribution<double> std_normal;
            return a + b * bm::pdf(std_normal, alpha) / bm::cdf(bm::complement(std_normal, alpha));
        }
        case DistributionKind::Weibull: return b * std::tgamma(1.0 + 1.0 / a);
        case DistributionKind::Exponential: return 1.0 / a;
    }
    return 0.0;
}

double TrueDistribution::cdf(double x) const {
    validate();
    if (x <= 0.0) return 0.0;
    switch (kind) {
        case DistributionKind::Lognormal: return bm::cdf(bm::lognormal_distribution<double>(a, b), x);
        case DistributionKind::TruncatedNormal: {
            const bm::normal_distribution<double> n(a, b);
            const double lo = bm::cdf(n, 0.0);
            return (bm::cdf(n, x) - lo) / bm::cdf(bm::complement(n, 0.0));
        }
        case DistributionKind::Weibull: return bm::cdf(bm::weibull_distribution<double>(a, b), x);
        case DistributionKind::Exponential: return bm::cdf(bm::exponential_distribution<double>(a), x);
    }
    return 0.0;
}

double TrueDistribution::quantile(double p) const {
    validate();
    if (!(p > 0.0 && p < 1.0)) fail(ErrorCode::InvalidParameters, "quantile level must lie in (0, 1)");
    switch (kind) {
        case DistributionKind::Lognormal: return bm::quantile(bm::lognormal_distribution<double>(a, b), p);
        case DistributionKind::TruncatedNormal: {
            // Work in upper-tail mass so locations far below zero stay accurate.
            const bm::normal_distribution<double> n(a, b);
            const double tail = (1.0 - p) * bm::cdf(bm::complement(n, 0.0));
            return std::max(0.0, bm::quantile(bm::complement(n, tail)));
        }
        case DistributionKind::Weibull: return bm::quantile(bm::weibull_distribution<double>(a, b), p);
        case DistributionKind::Exponential: return bm::quantile(bm::exponential_distribution<double>(a), p);
    }
    return 0.0;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t state = seed;
    const std::uint64_t s1 = splitmix64(state);
    state ^= stream * 0xd1342543de82ef95ULL;
    const std::uint64_t s2 = splitmix64(state);
    return std::mt19937_64(s1 ^ (s2 + 0x632be59bd9b4e019ULL));
}

double uniform_open(std::mt19937_64& rng) { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; }

std::vector<double> sample_true(const TrueDistribution& dist, std::size_t n, std::mt19937_64& rng) {
    dist.validate();
    if (n == 0) fail(ErrorCode::InvalidParameters, "sample count must be >= 1");
    std::vector<double> out(n);
    for (auto& x : out) x = dist.quantile(uniform_open(rng));
    return out;
}

std::vector<double> sample_true(const TrueDistribution& dist, std::size_t n, std::uint64_t seed) {
    auto rng = make_stream(seed, 0);
    return sample_true(dist, n, rng);
}

StageSupport build_stage_support(std::span<const double> samples, std::size_t S) {
    const std::size_t n = samples.size();
    if (n == 0) fail(ErrorCode::InsufficientData, "no samples");
    if (S == 0 || S > n) {
        fail(ErrorCode::InsufficientData, std::to_string(S) + " scenarios from " + std::to_string(n) + " samples");
    }
    std::vector<double> sorted(samples.begin(), samples.end());
    for (double v : sorted) {
        if (!std::isfinite(v)) fail(ErrorCode::InvalidInput, "non-finite sample");
    }
    std::sort(sorted.begin(), sorted.end());

    StageSupport out;
    out.sample_count = n;
    std::vector<std::size_t> counts;
    std::size_t begin = 0;
    for (std::size_t r = 0; r < S; ++r) {
        const std::size_t end = (r + 1) * n / S;
        double sum = 0.0;
        for (std::size_t k = begin; k < end; ++k) sum += sorted[k];
        const double mean = std::clamp(sum / static_cast<double>(end - begin), sorted[begin], sorted[end - 1]);
        if (!out.values.empty() && mean <= out.values.back()) {
            // Only possible when the boundary samples tie; fold into the previous bin.
            const double merged = out.values.back() * static_cast<double>(counts.back()) + sum;
            counts.back() += end - begin;
            out.values.back() = merged / static_cast<double>(counts.back());
            out.edges.pop_back();
        } else {
            out.values.push_back(mean);
            counts.push_back(end - begin);
        }
        if (end < n) out.edges.push_back(0.5 * (sorted[end - 1] + sorted[end]));
        begin = end;
    }
    out.f0.resize(counts.size());
    for (std::size_t r = 0; r < counts.size(); ++r) out.f0[r] = static_cast<double>(counts[r]) / static_cast<double>(n);
    return out;
}

Lattice build_lattice(const TrueDistribution& dist, std::size_t T, std::size_t N, std::size_t S, std::uint64_t seed) {
    if (T < 2) fail(ErrorCode::InvalidParameters, "horizon must be >= 2");
    Lattice lattice;
    lattice.horizon = T;
    lattice.stages.reserve(T - 1);
    for (std::size_t t = 2; t <= T; ++t) {
        auto rng = make_stream(seed, t);
        const auto samples = sample_true(dist, N, rng);
        lattice.stages.push_back(build_stage_support(samples, S));
    }
    return lattice;
}

SampleTable parse_sample_csv(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string line;
    SampleTable table;
    if (!std::getline(in, line)) fail(ErrorCode::InvalidInput, "empty sample file");
    for (const auto& cell : split(line)) {
        std::size_t pos = 0;
        unsigned long idx = 0;
        try {
            idx = std::stoul(cell, &pos);
        } catch (const std::exception&) {
            pos = 0;
        }
        if (cell.empty() || pos != cell.size()) fail(ErrorCode::InvalidInput, "header cell '" + cell + "' is not a stage index");
        table.stage_index.push_back(idx);
    }
    table.columns.resize(table.stage_index.size());
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split(line);
        if (cells.size() > table.columns.size()) {
            fail(ErrorCode::InvalidInput, "line " + std::to_string(line_no) + " has too many cells");
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (cells[c].empty()) continue;
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(cells[c], &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != cells[c].size() || !std::isfinite(v) || v < 0.0) {
                fail(ErrorCode::InvalidInput, "line " + std::to_string(line_no) + ": bad inflow '" + cells[c] + "'");
            }
            table.columns[c].push_back(v);
        }
    }
    return table;
}

SampleTable read_sample_csv(const std::filesystem::path& path) {
    std::ifstream file(path);
    if (!file) fail(ErrorCode::IoError, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << file.rdbuf();
    return parse_sample_csv(buffer.str());
}

Lattice lattice_from_table(const SampleTable& table, std::size_t S) {
    const std::size_t stages = table.stage_index.size();
    if (stages == 0) fail(ErrorCode::InvalidInput, "sample table has no stages");
    Lattice lattice;
    lattice.horizon = stages + 1;
    for (std::size_t c = 0; c < stages; ++c) {
        if (table.stage_index[c] != c + 2) fail(ErrorCode::InvalidInput, "stage columns must be 2, 3, ..., T in order");
        lattice.stages.push_back(build_stage_support(table.columns[c], S));
    }
    return lattice;
}

}  // namespace drsddp
