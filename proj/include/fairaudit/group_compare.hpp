#pragma once
// Pairwise group comparisons of implied thresholds, cost ratios and SDT
// parameters with stratified pairs-bootstrap intervals on the difference, and
// per-cell costs for producer x consumer policies.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairaudit/decision_core.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/label_audit.hpp"
#include "fairaudit/model_audit.hpp"
#include "fairaudit/stat_kernel.hpp"

namespace fairaudit {

enum class Metric : std::uint8_t { ImpliedThreshold, CostRatio, Criterion, Separation };

inline const char* to_string(Metric m) noexcept {
    switch (m) {
    case Metric::ImpliedThreshold: return "implied_threshold";
    case Metric::CostRatio: return "cost_ratio";
    case Metric::Criterion: return "criterion";
    case Metric::Separation: return "separation";
    }
    return "unknown";
}

inline Metric parse_metric(std::string_view s) {
    if (s == "implied_threshold") return Metric::ImpliedThreshold;
    if (s == "cost_ratio") return Metric::CostRatio;
    if (s == "criterion") return Metric::Criterion;
    if (s == "separation") return Metric::Separation;
    throw InputError("unknown metric '" + std::string(s) + "'");
}

struct ModelAuditConfig {
    double threshold = 0.5;
    std::vector<std::string> grouping;
    WindowPolicy policy = WindowPolicy::adaptive();
};

struct LabelAuditConfig {
    LabelGrouping grouping;
    CorrectionPolicy correction = CorrectionPolicy::HalfCount;
};

struct GroupComparison {
    GroupKey group_a;
    GroupKey group_b;
    Metric metric = Metric::ImpliedThreshold;
    double estimate_a = 0.0;
    double estimate_b = 0.0;
    double difference = 0.0;  // a - b
    IntervalEstimate interval;
    bool excludes_zero = false;
};

// Outcome for one requested pair: a comparison, or the reason there is none.
struct PairResult {
    GroupKey group_a;
    GroupKey group_b;
    std::optional<GroupComparison> comparison;
    std::string error;
    ErrorKind error_kind = ErrorKind::Degenerate;
    double failure_fraction = 0.0;
};

namespace detail {

// Units of one group ready for resampling: units[0, relevant) can affect the
// statistic, the rest never can.
template <class Unit>
struct Stratum {
    std::vector<Unit> units;
    std::size_t relevant = 0;
};

template <class Unit, class Statistic>
std::optional<double> evaluate(Statistic& stat, std::span<const Unit> sample) {
    return try_statistic(stat, sample);
}

template <class Unit, class Statistic>
PairResult compare_strata(const GroupKey& a, const Stratum<Unit>& sa, const GroupKey& b, const Stratum<Unit>& sb,
                          Statistic& stat, Metric metric, const BootstrapConfig& cfg) {
    PairResult result;
    result.group_a = a;
    result.group_b = b;
    const auto point_a = evaluate<Unit>(stat, std::span<const Unit>(sa.units));
    const auto point_b = evaluate<Unit>(stat, std::span<const Unit>(sb.units));
    if (!point_a || !point_b) {
        result.error = std::string(to_string(metric)) + " is undefined on the full data of group " +
                       (point_a ? b : a).canonical();
        result.error_kind = ErrorKind::Degenerate;
        return result;
    }

    // Each group's replicate stream depends only on the seed and the group, so
    // (A, B) and (B, A) see the same resamples.
    const CounterRng root(cfg.seed);
    const CounterRng root_a = root.derive(fnv1a64(a.canonical()));
    const CounterRng root_b = root.derive(fnv1a64(b.canonical()));
    std::vector<Unit> buf_a, buf_b;
    buf_a.reserve(sa.relevant);
    buf_b.reserve(sb.relevant);
    std::vector<double> diffs;
    diffs.reserve(cfg.replicates);
    std::size_t failures = 0;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
        CounterRng rng_a = root_a.derive(r);
        CounterRng rng_b = root_b.derive(r);
        resample_into(std::span<const Unit>(sa.units), rng_a, buf_a, sa.relevant);
        resample_into(std::span<const Unit>(sb.units), rng_b, buf_b, sb.relevant);
        const auto va = evaluate<Unit>(stat, std::span<const Unit>(buf_a));
        const auto vb = evaluate<Unit>(stat, std::span<const Unit>(buf_b));
        if (va && vb) diffs.push_back(*va - *vb);
        else ++failures;
    }
    const double failure_fraction = static_cast<double>(failures) / static_cast<double>(cfg.replicates);
    result.failure_fraction = failure_fraction;
    if (failure_fraction > 0.5) {
        result.error = std::string(to_string(metric)) + " undefined on " + std::to_string(failures) + " of " +
                       std::to_string(cfg.replicates) + " bootstrap replicates";
        result.error_kind = ErrorKind::Unstable;
        return result;
    }

    GroupComparison cmp;
    cmp.group_a = a;
    cmp.group_b = b;
    cmp.metric = metric;
    cmp.estimate_a = *point_a;
    cmp.estimate_b = *point_b;
    cmp.difference = *point_a - *point_b;
    cmp.interval = percentile_interval(cmp.difference, std::move(diffs), cfg.level, cfg.replicates, failures);
    cmp.excludes_zero = !(cmp.interval.lower <= 0.0 && 0.0 <= cmp.interval.upper);
    result.comparison = std::move(cmp);
    return result;
}

template <class Unit, class Statistic>
std::vector<PairResult> compare_all(const std::map<GroupKey, Stratum<Unit>>& strata,
                                    std::span<const std::pair<GroupKey, GroupKey>> pairs, Statistic& stat,
                                    Metric metric, const BootstrapConfig& cfg) {
    validate(cfg);
    std::vector<PairResult> out;
    out.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        const auto ia = strata.find(a);
        const auto ib = strata.find(b);
        if (ia == strata.end() || ib == strata.end()) {
            PairResult missing;
            missing.group_a = a;
            missing.group_b = b;
            missing.error = "group " + (ia == strata.end() ? a : b).canonical() + " has no records";
            missing.error_kind = ErrorKind::Input;
            out.push_back(std::move(missing));
            continue;
        }
        out.push_back(compare_strata(a, ia->second, b, ib->second, stat, metric, cfg));
    }
    return out;
}

}  // namespace detail

// Every unordered pair of `groups`, in map order.
template <class V>
std::vector<std::pair<GroupKey, GroupKey>> all_pairs(const std::map<GroupKey, V>& groups) {
    std::vector<std::pair<GroupKey, GroupKey>> out;
    for (auto i = groups.begin(); i != groups.end(); ++i)
        for (auto j = std::next(i); j != groups.end(); ++j) out.emplace_back(i->first, j->first);
    return out;
}

inline std::vector<PairResult> compare_groups(std::span<const DecisionRecord> records,
                                              const ModelAuditConfig& audit,
                                              std::span<const std::pair<GroupKey, GroupKey>> pairs, Metric metric,
                                              const BootstrapConfig& cfg) {
    if (metric == Metric::Criterion || metric == Metric::Separation)
        throw InputError(std::string("metric ") + to_string(metric) + " applies to label audits only");
    audit.policy.validate();
    const double t = audit.threshold;
    const auto radius = audit.policy.relevance_radius();

    std::map<GroupKey, detail::Stratum<ScoredOutcome>> strata;
    for (auto& [key, members] : partition_by(records, std::span<const std::string>(audit.grouping))) {
        detail::Stratum<ScoredOutcome> s;
        s.units = scored_outcomes(members);
        if (radius) {
            const auto it = std::stable_partition(s.units.begin(), s.units.end(), [&](const ScoredOutcome& u) {
                return std::abs(u.score - t) < *radius;
            });
            s.relevant = static_cast<std::size_t>(it - s.units.begin());
        } else {
            s.relevant = s.units.size();
        }
        strata.emplace(key, std::move(s));
    }

    auto stat = [&](std::span<const ScoredOutcome> sample) -> double {
        const double tau = prevalence_at_threshold(sample, t, audit.policy).implied_threshold;
        return metric == Metric::CostRatio ? implied_cost_ratio(tau).value() : tau;
    };
    return detail::compare_all(strata, pairs, stat, metric, cfg);
}

inline std::vector<PairResult> compare_groups(std::span<const LabelRecord> records, const LabelAuditConfig& audit,
                                              std::span<const std::pair<GroupKey, GroupKey>> pairs, Metric metric,
                                              const BootstrapConfig& cfg) {
    std::map<GroupKey, detail::Stratum<LabelOutcome>> strata;
    for (const auto& r : records) strata[audit.grouping.key_for(r)].units.push_back({r.label, r.truth});
    for (auto& [key, s] : strata) s.relevant = s.units.size();

    auto stat = [&](std::span<const LabelOutcome> sample) -> double {
        const SdtEstimate est = sdt_estimate(confusion(sample, audit.correction));
        switch (metric) {
        case Metric::ImpliedThreshold: return est.implied_threshold;
        case Metric::CostRatio: return est.cost_ratio;
        case Metric::Criterion: return est.criterion;
        case Metric::Separation: return est.separation;
        }
        return est.implied_threshold;
    };
    return detail::compare_all(strata, pairs, stat, metric, cfg);
}

// Decision threshold and cost ratio applied within one producer x consumer cell.
struct CellPolicy {
    double threshold = 0.5;
    CostRatio cost_ratio{1.0};
};

// FP + c_ab * FN within each (producer, consumer) cell, thresholding at t_ab.
inline std::map<GroupKey, double> cost_of_policy_by_pair(std::span<const DecisionRecord> records,
                                                         const std::string& producer_dim,
                                                         const std::string& consumer_dim,
                                                         const std::map<GroupKey, CellPolicy>& cells) {
    const std::vector<std::string> dims{producer_dim, consumer_dim};
    std::map<GroupKey, std::pair<std::vector<bool>, std::vector<bool>>> by_cell;  // decisions, outcomes
    for (const auto& r : records) {
        const GroupKey cell = r.group.project(dims);
        const auto it = cells.find(cell);
        if (it == cells.end()) throw MissingCellError("no threshold/cost ratio for cell " + cell.canonical());
        auto& [decisions, outcomes] = by_cell[cell];
        decisions.push_back(r.score >= it->second.threshold);
        outcomes.push_back(r.outcome);
    }
    std::map<GroupKey, double> out;
    for (const auto& [cell, data] : by_cell)
        out.emplace(cell, total_cost(data.first, data.second, cells.at(cell).cost_ratio));
    return out;
}

}  // namespace fairaudit
