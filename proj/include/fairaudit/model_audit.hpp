#pragma once
// Implied threshold of a deployed score cutoff: the outcome probability at the
// cutoff, estimated as the intercept of a tricube-weighted local linear fit of
// outcomes on centred scores.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairaudit/decision_core.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/stat_kernel.hpp"

namespace fairaudit {

struct WindowPolicy {
    enum class Mode : std::uint8_t { Fixed, Adaptive };

    Mode mode = Mode::Adaptive;
    double halfwidth = 0.0;  // fixed mode
    double min_effective_n = 200.0;
    double max_halfwidth = std::numeric_limits<double>::infinity();  // infinite: bounded by the data

    static WindowPolicy fixed(double halfwidth) {
        WindowPolicy p;
        p.mode = Mode::Fixed;
        p.halfwidth = halfwidth;
        p.validate();
        return p;
    }

    static WindowPolicy adaptive(double min_effective_n = 200.0,
                                 double max_halfwidth = std::numeric_limits<double>::infinity()) {
        WindowPolicy p;
        p.mode = Mode::Adaptive;
        p.min_effective_n = min_effective_n;
        p.max_halfwidth = max_halfwidth;
        p.validate();
        return p;
    }

    void validate() const {
        if (mode == Mode::Fixed) {
            if (!(halfwidth > 0.0) || !std::isfinite(halfwidth))
                throw InputError("window: fixed halfwidth must be positive and finite");
        } else {
            if (!(min_effective_n > 0.0) || !std::isfinite(min_effective_n))
                throw InputError("window: min_effective_n must be positive");
            if (!(max_halfwidth > 0.0)) throw InputError("window: max_halfwidth must be positive");
        }
    }

    // Records at least this far from the threshold never receive weight.
    std::optional<double> relevance_radius() const {
        if (mode == Mode::Fixed) return halfwidth;
        if (std::isfinite(max_halfwidth)) return max_halfwidth;
        return std::nullopt;
    }
};

// Multiplicative step of the adaptive halfwidth search.
inline constexpr double kWindowGrowth = 1.1;

struct PrevalenceEstimate {
    double implied_threshold = 0.0;  // intercept clamped to [0, 1]
    double intercept = 0.0;          // raw
    double slope = 0.0;
    double halfwidth = 0.0;
    double effective_n = 0.0;
    std::size_t records_in_window = 0;
    bool degenerate = false;
    bool clamped = false;
    std::optional<IntervalEstimate> interval;
};

// [1 - (|s - t| / d)^3]^3 inside the window, 0 outside.
inline double tricubic_weight(double score, double t, double d) {
    if (!(d > 0.0)) throw DomainError("tricubic_weight: halfwidth must be positive");
    const double u = std::abs(score - t) / d;
    if (u >= 1.0) return 0.0;
    const double v = 1.0 - u * u * u;
    return v * v * v;
}

// Unweighted mean outcome over t_l <= s <= t_u.
inline double naive_window_prevalence(std::span<const ScoredOutcome> records, double t_l, double t_u) {
    if (!(t_l < t_u)) throw DomainError("naive_window_prevalence: need t_l < t_u");
    std::size_t n = 0, positives = 0;
    for (const auto& r : records) {
        if (r.score >= t_l && r.score <= t_u) {
            ++n;
            positives += r.outcome ? 1 : 0;
        }
    }
    if (n == 0) {
        throw InsufficientDataError("naive_window_prevalence: empty window",
                                    {0.5 * (t_l + t_u), 0.5 * (t_u - t_l), 0, 0.0});
    }
    return static_cast<double>(positives) / static_cast<double>(n);
}

inline double naive_window_prevalence(std::span<const DecisionRecord> records, double t_l, double t_u) {
    const auto so = scored_outcomes(records);
    return naive_window_prevalence(std::span<const ScoredOutcome>(so), t_l, t_u);
}

namespace detail {

struct WindowFit {
    double halfwidth;
    std::vector<WeightedPoint> points;  // x = s - t, positive weight only
};

inline double kish(std::span<const WeightedPoint> sorted_by_distance, double d) {
    double sw = 0.0, sw2 = 0.0;
    for (const auto& p : sorted_by_distance) {
        const double u = std::abs(p.x) / d;
        if (u >= 1.0) break;
        const double v = 1.0 - u * u * u;
        const double w = v * v * v;
        sw += w;
        sw2 += w * w;
    }
    return sw2 > 0.0 ? sw * sw / sw2 : 0.0;
}

// Halfwidth search for adaptive mode: d starts at the smallest positive
// distance between the threshold and a score and grows by kWindowGrowth until
// the Kish effective sample size reaches the target or d hits the cap.
// Only the nearest records are ever sorted; the sorted prefix is extended when
// the window outgrows it.
inline double choose_adaptive_halfwidth(std::vector<WeightedPoint>& cand, double cap, double target) {
    const auto closer = [](const WeightedPoint& a, const WeightedPoint& b) {
        return std::abs(a.x) < std::abs(b.x);
    };
    const std::size_t m = cand.size();
    std::size_t sorted = 0;
    const auto ensure_sorted = [&](std::size_t k) {
        k = std::min(k, m);
        if (k <= sorted) return;
        if (k < m) std::nth_element(cand.begin() + sorted, cand.begin() + k, cand.end(), closer);
        std::sort(cand.begin() + sorted, cand.begin() + k, closer);
        sorted = k;
    };

    double d0 = std::numeric_limits<double>::infinity();
    for (const auto& p : cand)
        if (p.x != 0.0) d0 = std::min(d0, std::abs(p.x));
    if (!std::isfinite(d0)) {
        // Every candidate sits exactly at the threshold.
        ensure_sorted(m);
        return std::isfinite(cap) ? cap : 1.0;
    }

    const auto needed = static_cast<std::size_t>(std::ceil(target));
    ensure_sorted(std::max<std::size_t>(4 * needed, 1024));

    // The Kish size never exceeds the number of positively weighted points,
    // so no d at or below the needed-th nearest distance can qualify.
    double floor_d = 0.0;
    if (needed <= m) {
        ensure_sorted(needed);
        floor_d = std::abs(cand[needed - 1].x);
    }
    int k = 0;
    if (floor_d > d0) k = static_cast<int>(std::floor(std::log(floor_d / d0) / std::log(kWindowGrowth)));
    for (;; ++k) {
        double d = d0 * std::pow(kWindowGrowth, k);
        const bool at_cap = d >= cap;
        if (at_cap) d = cap;
        while (sorted < m && std::abs(cand[sorted - 1].x) < d) ensure_sorted(sorted * 4);
        if (at_cap || kish(std::span<const WeightedPoint>(cand.data(), sorted), d) >= target) return d;
    }
}

inline WindowFit window_points(std::span<const ScoredOutcome> records, double t, const WindowPolicy& policy) {
    double cap = policy.mode == WindowPolicy::Mode::Fixed ? policy.halfwidth : policy.max_halfwidth;
    if (!std::isfinite(cap)) {
        double far = 0.0;
        for (const auto& r : records) far = std::max(far, std::abs(r.score - t));
        cap = far > 0.0 ? 2.0 * far : 1.0;
    }
    std::vector<WeightedPoint> cand;
    for (const auto& r : records) {
        const double x = r.score - t;
        if (std::abs(x) < cap) cand.push_back({x, r.outcome ? 1.0 : 0.0, 0.0});
    }
    double d = cap;
    if (policy.mode == WindowPolicy::Mode::Adaptive && !cand.empty())
        d = choose_adaptive_halfwidth(cand, cap, policy.min_effective_n);

    WindowFit out{d, {}};
    for (const auto& p : cand) {
        const double w = tricubic_weight(p.x, 0.0, d);
        if (w > 0.0) out.points.push_back({p.x, p.y, w});
    }
    return out;
}

}  // namespace detail

inline PrevalenceEstimate prevalence_at_threshold(std::span<const ScoredOutcome> records, double t,
                                                  const WindowPolicy& policy) {
    if (!std::isfinite(t)) throw DomainError("prevalence_at_threshold: threshold must be finite");
    policy.validate();
    for (const auto& r : records)
        if (!std::isfinite(r.score)) throw DomainError("prevalence_at_threshold: non-finite score");

    auto window = detail::window_points(records, t, policy);
    if (window.points.size() < 2) {
        double sw = 0.0, sw2 = 0.0;
        for (const auto& p : window.points) {
            sw += p.w;
            sw2 += p.w * p.w;
        }
        throw InsufficientDataError(
            "prevalence_at_threshold: " + std::to_string(window.points.size()) +
                " record(s) with positive weight within halfwidth " + std::to_string(window.halfwidth) +
                " of threshold " + std::to_string(t),
            {t, window.halfwidth, window.points.size(), sw2 > 0.0 ? sw * sw / sw2 : 0.0});
    }
    const LinearFit fit = weighted_linear_fit(window.points);

    PrevalenceEstimate est;
    est.intercept = fit.intercept;
    est.slope = fit.slope;
    est.halfwidth = window.halfwidth;
    est.effective_n = fit.effective_n;
    est.records_in_window = window.points.size();
    est.degenerate = fit.degenerate;
    est.implied_threshold = std::clamp(fit.intercept, 0.0, 1.0);
    est.clamped = est.implied_threshold != fit.intercept;
    return est;
}

// With `interval` set, adds a pairs-bootstrap interval on the implied threshold.
inline PrevalenceEstimate prevalence_at_threshold(std::span<const ScoredOutcome> records, double t,
                                                  const WindowPolicy& policy,
                                                  const std::optional<BootstrapConfig>& interval) {
    PrevalenceEstimate est = prevalence_at_threshold(records, t, policy);
    if (interval) {
        est.interval = bootstrap_interval<ScoredOutcome>(
            [&](std::span<const ScoredOutcome> sample) {
                return prevalence_at_threshold(sample, t, policy).implied_threshold;
            },
            records, *interval);
    }
    return est;
}

inline PrevalenceEstimate prevalence_at_threshold(std::span<const DecisionRecord> records, double t,
                                                  const WindowPolicy& policy,
                                                  const std::optional<BootstrapConfig>& interval = std::nullopt) {
    const auto so = scored_outcomes(records);
    return prevalence_at_threshold(std::span<const ScoredOutcome>(so), t, policy, interval);
}

// Per-group outcome of audit_model; a group either has an estimate or a reason
// it was skipped.
struct ModelGroupResult {
    std::size_t records = 0;
    std::optional<PrevalenceEstimate> estimate;
    std::string skip_reason;
    ErrorKind skip_kind = ErrorKind::Degenerate;
};

// Bootstrap seed for one group; depends only on the run seed and the group.
inline Seed group_seed(Seed seed, const GroupKey& group) {
    return Seed{detail::finalize64(seed.value ^ detail::fnv1a64(group.canonical()))};
}

template <class Record>
std::map<GroupKey, std::vector<Record>> partition_by(std::span<const Record> records,
                                                     std::span<const std::string> dimensions) {
    if (dimensions.empty()) throw InputError("grouping: at least one dimension is required");
    std::map<GroupKey, std::vector<Record>> parts;
    for (const auto& r : records) parts[r.group.project(dimensions)].push_back(r);
    return parts;
}

inline std::map<GroupKey, ModelGroupResult> audit_model(std::span<const DecisionRecord> records, double t,
                                                        std::span<const std::string> grouping,
                                                        const WindowPolicy& policy,
                                                        const std::optional<BootstrapConfig>& interval) {
    policy.validate();
    if (!std::isfinite(t)) throw DomainError("audit_model: threshold must be finite");
    const auto parts = partition_by(records, grouping);
    std::map<GroupKey, ModelGroupResult> out;
    for (const auto& [key, members] : parts) {
        ModelGroupResult res;
        res.records = members.size();
        std::optional<BootstrapConfig> cfg = interval;
        if (cfg) cfg->seed = group_seed(interval->seed, key);
        try {
            res.estimate = prevalence_at_threshold(std::span<const DecisionRecord>(members), t, policy, cfg);
        } catch (const DegenerateError& e) {
            res.skip_reason = e.what();
            res.skip_kind = e.kind();
        } catch (const UnstableStatisticError& e) {
            res.skip_reason = e.what();
            res.skip_kind = e.kind();
        }
        out.emplace(key, std::move(res));
    }
    return out;
}

inline std::map<GroupKey, ModelGroupResult> audit_model(const std::vector<DecisionRecord>& records, double t,
                                                        const std::vector<std::string>& grouping,
                                                        const WindowPolicy& policy,
                                                        const std::optional<BootstrapConfig>& interval = std::nullopt) {
    return audit_model(std::span<const DecisionRecord>(records), t, std::span<const std::string>(grouping), policy,
                       interval);
}

}  // namespace fairaudit
