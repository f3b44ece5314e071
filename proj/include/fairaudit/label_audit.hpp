#pragma once
// Equal-variance signal detection model of a labeler: negatives produce
// N(0, 1) signals, positives N(d', 1), and the labeler says "positive" when
// the signal reaches the criterion. Observed error rates determine the
// criterion and separation; with the prevalence, Bayes' rule gives the
// implied threshold and cost ratio the labeler acts under.

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairaudit/decision_core.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/stat_kernel.hpp"

namespace fairaudit {

struct LabelRecord {
    bool label = false;  // labeler's call
    bool truth = false;  // expert ground truth
    std::string labeler;
    std::string item;
    GroupKey group;

    friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

// (label, truth) pair; the unit the SDT statistics and resamplers work on.
struct LabelOutcome {
    bool label = false;
    bool truth = false;
};

inline ConfusionSummary confusion(std::span<const LabelOutcome> pairs, CorrectionPolicy correction) {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& p : pairs) {
        if (p.label && p.truth) ++tp;
        else if (p.label) ++fp;
        else if (p.truth) ++fn;
        else ++tn;
    }
    return confusion_from_counts(tp, fp, fn, tn, correction);
}

struct SdtFit {
    double criterion = 0.0;
    double separation = 0.0;
};

// t = Phi^-1(1 - FPR), d' = t - Phi^-1(FNR).
inline SdtFit sdt_fit(const ConfusionSummary& summary) {
    const auto interior = [](double r) { return r > 0.0 && r < 1.0; };
    if (!interior(summary.fpr) || !interior(summary.fnr)) {
        throw DegenerateRateError("sdt_fit: error rates must lie strictly inside (0, 1); fpr=" +
                                  std::to_string(summary.fpr) + " fnr=" + std::to_string(summary.fnr));
    }
    SdtFit fit;
    fit.criterion = std_normal_quantile(1.0 - summary.fpr);
    fit.separation = fit.criterion - std_normal_quantile(summary.fnr);
    return fit;
}

namespace detail {

inline void require_prevalence(double prevalence) {
    if (!(prevalence > 0.0 && prevalence < 1.0))
        throw DomainError("SDT: prevalence must lie strictly inside (0, 1)");
}

// ((1 - phi) / phi) * exp(-t d' + d'^2 / 2)
inline double sdt_odds_against(double criterion, double separation, double prevalence) {
    require_prevalence(prevalence);
    if (!std::isfinite(criterion) || !std::isfinite(separation))
        throw DomainError("SDT: criterion and separation must be finite");
    return (1.0 - prevalence) / prevalence *
           std::exp(-criterion * separation + 0.5 * separation * separation);
}

}  // namespace detail

// P(Y = 1 | signal = t) under the two-Gaussian mixture.
inline double sdt_implied_threshold(double criterion, double separation, double prevalence) {
    return 1.0 / (1.0 + detail::sdt_odds_against(criterion, separation, prevalence));
}

inline CostRatio sdt_cost_ratio(double criterion, double separation, double prevalence) {
    const double c = detail::sdt_odds_against(criterion, separation, prevalence);
    if (!(c > 0.0) || !std::isfinite(c))
        throw UndefinedRatioError("SDT cost ratio is not a positive finite number");
    return CostRatio(c);
}

// d' = sqrt(2) * Phi^-1(AUC).
inline double dprime_from_auc(double auc) {
    if (!(auc > 0.0 && auc < 1.0)) throw DomainError("dprime_from_auc: AUC must lie strictly inside (0, 1)");
    return std::numbers::sqrt2 * std_normal_quantile(auc);
}

struct MinCounts {
    std::size_t positives = 10;
    std::size_t negatives = 10;
};

struct SdtEstimate {
    double criterion = 0.0;
    double separation = 0.0;
    double prevalence = 0.0;
    double implied_threshold = 0.0;
    double cost_ratio = 0.0;
    ConfusionSummary confusion;
    bool low_confidence = false;
    bool anti_correlated = false;  // d' < 0: labels run against the truth
};

inline SdtEstimate sdt_estimate(const ConfusionSummary& summary, const MinCounts& min_counts = {}) {
    const SdtFit fit = sdt_fit(summary);
    SdtEstimate est;
    est.criterion = fit.criterion;
    est.separation = fit.separation;
    est.prevalence = summary.prevalence;
    est.confusion = summary;
    est.implied_threshold = sdt_implied_threshold(fit.criterion, fit.separation, summary.prevalence);
    // Derived from the implied threshold so the two stay exactly consistent.
    est.cost_ratio = implied_cost_ratio(est.implied_threshold).value();
    est.low_confidence = summary.positives() < min_counts.positives || summary.negatives() < min_counts.negatives;
    est.anti_correlated = fit.separation < 0.0;
    return est;
}

struct LabelGrouping {
    enum class Mode : std::uint8_t { ByGroup, ByLabeler, ByGroupAndLabeler };

    Mode mode = Mode::ByGroup;
    // Group dimensions to keep; empty keeps the record's full group key.
    std::vector<std::string> dimensions;

    GroupKey key_for(const LabelRecord& r) const {
        const auto group_part = [&] {
            return dimensions.empty() ? r.group : r.group.project(dimensions);
        };
        switch (mode) {
        case Mode::ByGroup: return group_part();
        case Mode::ByLabeler: return GroupKey{{"labeler", r.labeler}};
        case Mode::ByGroupAndLabeler: return group_part().with("labeler", r.labeler);
        }
        return group_part();
    }
};

struct LabelGroupResult {
    std::size_t records = 0;
    std::optional<SdtEstimate> estimate;
    std::string skip_reason;
    ErrorKind skip_kind = ErrorKind::Degenerate;
};

inline std::map<GroupKey, LabelGroupResult> audit_labels(std::span<const LabelRecord> records,
                                                         const LabelGrouping& grouping,
                                                         CorrectionPolicy correction,
                                                         const MinCounts& min_counts = {}) {
    if (records.empty()) throw InputError("audit_labels: no records");
    std::map<GroupKey, std::vector<LabelOutcome>> parts;
    for (const auto& r : records) parts[grouping.key_for(r)].push_back({r.label, r.truth});

    std::map<GroupKey, LabelGroupResult> out;
    for (const auto& [key, pairs] : parts) {
        LabelGroupResult res;
        res.records = pairs.size();
        try {
            res.estimate = sdt_estimate(confusion(pairs, correction), min_counts);
        } catch (const DegenerateError& e) {
            res.skip_reason = e.what();
            res.skip_kind = e.kind();
        }
        out.emplace(key, std::move(res));
    }
    return out;
}

inline std::map<GroupKey, LabelGroupResult> audit_labels(const std::vector<LabelRecord>& records,
                                                         const LabelGrouping& grouping,
                                                         CorrectionPolicy correction,
                                                         const MinCounts& min_counts = {}) {
    return audit_labels(std::span<const LabelRecord>(records), grouping, correction, min_counts);
}

}  // namespace fairaudit
