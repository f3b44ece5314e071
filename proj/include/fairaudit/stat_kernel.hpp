#pragma once
// Numeric primitives shared by the estimators: standard normal functions,
// weighted least squares on one regressor, a counter-based random stream and
// a percentile bootstrap.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "fairaudit/errors.hpp"

namespace fairaudit {

// ---------------------------------------------------------------------------
// Standard normal distribution

inline double std_normal_density(double x) {
    if (!std::isfinite(x)) throw DomainError("std_normal_density: non-finite argument");
    return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

inline double std_normal_cdf(double x) {
    if (!std::isfinite(x)) throw DomainError("std_normal_cdf: non-finite argument");
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

namespace detail {

// Lower half (p <= 0.5) of the inverse normal CDF. Acklam's rational
// approximation (relative error ~1.2e-9) followed by one Newton step on the
// CDF, which brings the result to full double precision.
inline double lower_normal_quantile(double p) {
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    }
    const double residual = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
    return x - residual / std_normal_density(x);
}

}  // namespace detail

// Upper-half arguments are reflected through 1 - p, which is exact in binary
// floating point for p >= 0.5, so the tail near 1 keeps full accuracy.
inline double std_normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DomainError("std_normal_quantile: p must lie in (0, 1)");
    if (p > 0.5) return -detail::lower_normal_quantile(1.0 - p);
    return detail::lower_normal_quantile(p);
}

// ---------------------------------------------------------------------------
// Weighted least squares, y ~ intercept + slope * x

struct WeightedPoint {
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
};

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double effective_n = 0.0;  // Kish: (sum w)^2 / sum w^2
    bool degenerate = false;   // every positively weighted x was identical
};

inline LinearFit weighted_linear_fit(std::span<const WeightedPoint> points) {
    double sw = 0.0, sw2 = 0.0, swx = 0.0, swy = 0.0;
    std::optional<double> first_x;
    bool distinct_x = false;
    for (const auto& p : points) {
        if (!(p.w >= 0.0) || !std::isfinite(p.w))
            throw DomainError("weighted_linear_fit: weights must be finite and nonnegative");
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw DomainError("weighted_linear_fit: non-finite coordinate");
        if (p.w == 0.0) continue;
        sw += p.w;
        sw2 += p.w * p.w;
        swx += p.w * p.x;
        swy += p.w * p.y;
        if (!first_x) first_x = p.x;
        else if (p.x != *first_x) distinct_x = true;
    }
    if (sw == 0.0) throw EmptyFitError("weighted_linear_fit: all weights are zero");

    LinearFit fit;
    fit.effective_n = sw * sw / sw2;
    const double xbar = swx / sw;
    const double ybar = swy / sw;
    double sxx = 0.0, sxy = 0.0;
    if (distinct_x) {
        for (const auto& p : points) {
            if (p.w == 0.0) continue;
            const double dx = p.x - xbar;
            sxx += p.w * dx * dx;
            sxy += p.w * dx * (p.y - ybar);
        }
    }
    if (!distinct_x || sxx == 0.0) {
        fit.intercept = ybar;
        fit.slope = 0.0;
        fit.degenerate = true;
        return fit;
    }
    fit.slope = sxy / sxx;
    fit.intercept = ybar - fit.slope * xbar;
    return fit;
}

// ---------------------------------------------------------------------------
// Random stream

struct Seed {
    std::uint64_t value = 0;
    friend bool operator==(Seed, Seed) = default;
};

namespace detail {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 output function.
inline constexpr std::uint64_t finalize64(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// FNV-1a; used to turn string identities into stream tags.
inline constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

// Counter-based generator: draw i of a stream is finalize64(key + (i+1) * golden),
// i.e. the SplitMix64 sequence started at `key`. Streams are keyed by a seed
// and a chain of integer tags, so any sub-stream is a pure function of
// (seed, tags) and independent of evaluation order.
class CounterRng {
public:
    explicit CounterRng(Seed seed) noexcept : key_(detail::finalize64(seed.value + detail::kGolden)) {}

    CounterRng derive(std::uint64_t tag) const noexcept {
        CounterRng child = *this;
        child.key_ = detail::finalize64(key_ ^ detail::finalize64(tag + detail::kGolden));
        child.counter_ = 0;
        return child;
    }

    std::uint64_t at(std::uint64_t index) const noexcept {
        return detail::finalize64(key_ + (index + 1) * detail::kGolden);
    }

    std::uint64_t next() noexcept { return at(counter_++); }

    // [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // (0, 1); safe as a log argument.
    double uniform_open() noexcept {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform index in [0, n) by multiply-shift.
    std::size_t below(std::size_t n) noexcept {
        const auto wide = static_cast<unsigned __int128>(next()) * n;
        return static_cast<std::size_t>(wide >> 64);
    }

    // Box-Muller, cosine branch only, so each deviate consumes exactly two draws.
    double normal() noexcept {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Bootstrap

struct IntervalEstimate {
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    std::size_t replicates = 0;  // requested
    std::size_t failures = 0;    // replicates on which the statistic was undefined
};

struct BootstrapConfig {
    std::size_t replicates = 1000;
    double level = 0.95;
    Seed seed{};
};

inline void validate(const BootstrapConfig& cfg) {
    if (cfg.replicates < 100) throw InputError("bootstrap: at least 100 replicates are required");
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw InputError("bootstrap: level must lie in (0, 1)");
}

// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted values.
inline double sorted_quantile(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InputError("sorted_quantile: empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Percentile interval around `point`. The interval is widened to contain the
// point when the replicate distribution sits entirely to one side of it.
inline IntervalEstimate percentile_interval(double point, std::vector<double> values, double level,
                                            std::size_t requested, std::size_t failures) {
    std::sort(values.begin(), values.end());
    const double alpha = 1.0 - level;
    IntervalEstimate out;
    out.point = point;
    out.level = level;
    out.replicates = requested;
    out.failures = failures;
    out.lower = std::min(sorted_quantile(values, alpha / 2.0), point);
    out.upper = std::max(sorted_quantile(values, 1.0 - alpha / 2.0), point);
    return out;
}

// Draws records.size() indices with replacement and appends the chosen
// records whose index is below `keep_below` to `out`. With keep_below equal
// to the size this is an ordinary resample; a smaller value lets callers that
// place irrelevant records at the tail skip copying them without changing
// the random stream.
template <class T>
void resample_into(std::span<const T> records, CounterRng& rng, std::vector<T>& out,
                   std::size_t keep_below) {
    out.clear();
    const std::size_t n = records.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = rng.below(n);
        if (j < keep_below) out.push_back(records[j]);
    }
}

template <class T>
void resample_into(std::span<const T> records, CounterRng& rng, std::vector<T>& out) {
    resample_into(records, rng, out, records.size());
}

namespace detail {

// Runs a statistic, mapping "undefined on this data" outcomes to nullopt.
template <class Statistic, class T>
std::optional<double> try_statistic(Statistic& stat, std::span<const T> sample) {
    try {
        using R = std::invoke_result_t<Statistic&, std::span<const T>>;
        if constexpr (std::is_same_v<R, std::optional<double>>) {
            auto v = stat(sample);
            if (v && !std::isfinite(*v)) return std::nullopt;
            return v;
        } else {
            const double v = stat(sample);
            if (!std::isfinite(v)) return std::nullopt;
            return v;
        }
    } catch (const DegenerateError&) {
        return std::nullopt;
    }
}

}  // namespace detail

// Percentile bootstrap. Replicate r resamples with the stream
// CounterRng(seed).derive(r), so results do not depend on evaluation order.
template <class T, class Statistic>
IntervalEstimate bootstrap_interval(Statistic&& statistic, std::span<const T> records,
                                    const BootstrapConfig& cfg) {
    validate(cfg);
    if (records.empty()) throw InputError("bootstrap: no records");

    const auto point = detail::try_statistic(statistic, records);
    if (!point) throw DegenerateError("bootstrap: statistic is undefined on the full data");

    const CounterRng root(cfg.seed);
    std::vector<T> buffer;
    buffer.reserve(records.size());
    std::vector<double> values;
    values.reserve(cfg.replicates);
    std::size_t failures = 0;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        CounterRng rng = root.derive(r);
        resample_into(records, rng, buffer);
        const auto v = detail::try_statistic(statistic, std::span<const T>(buffer));
        if (v) values.push_back(*v);
        else ++failures;
    }
    const double failure_fraction = static_cast<double>(failures) / static_cast<double>(cfg.replicates);
    if (failure_fraction > 0.5) {
        throw UnstableStatisticError("bootstrap: statistic undefined on " +
                                         std::to_string(failures) + " of " +
                                         std::to_string(cfg.replicates) + " replicates",
                                     failure_fraction);
    }
    return percentile_interval(*point, std::move(values), cfg.level, cfg.replicates, failures);
}

template <class T, class Statistic>
IntervalEstimate bootstrap_interval(Statistic&& statistic, const std::vector<T>& records,
                                    const BootstrapConfig& cfg) {
    return bootstrap_interval<T>(std::forward<Statistic>(statistic), std::span<const T>(records), cfg);
}

}  // namespace fairaudit
