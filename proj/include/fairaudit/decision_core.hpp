#pragma once
// Records and the cost calculus of binary decisions: thresholding, total cost,
// the cost-minimizing implied threshold and its inverse.

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <iterator>
#include <ranges>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fairaudit/errors.hpp"

namespace fairaudit {

// Ordered (dimension, category) pairs, e.g. producer=a|consumer=b.
class GroupKey {
public:
    using Dimension = std::pair<std::string, std::string>;

    GroupKey() = default;

    GroupKey(std::initializer_list<Dimension> dims) : GroupKey(std::vector<Dimension>(dims)) {}

    explicit GroupKey(std::vector<Dimension> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw InputError("GroupKey: at least one dimension is required");
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (dims_[i].first.empty()) throw InputError("GroupKey: empty dimension name");
            for (std::size_t j = 0; j < i; ++j) {
                if (dims_[i].first == dims_[j].first)
                    throw InputError("GroupKey: duplicate dimension '" + dims_[i].first + "'");
            }
        }
    }

    // Parses the canonical "dim1=val1|dim2=val2" rendering.
    static GroupKey parse(std::string_view text) {
        std::vector<Dimension> dims;
        std::size_t start = 0;
        while (start <= text.size()) {
            const std::size_t bar = std::min(text.find('|', start), text.size());
            const std::string_view part = text.substr(start, bar - start);
            const std::size_t eq = part.find('=');
            if (eq == std::string_view::npos)
                throw InputError("GroupKey: expected dim=value in '" + std::string(text) + "'");
            dims.emplace_back(std::string(part.substr(0, eq)), std::string(part.substr(eq + 1)));
            start = bar + 1;
        }
        return GroupKey(std::move(dims));
    }

    const std::vector<Dimension>& dimensions() const noexcept { return dims_; }
    bool empty() const noexcept { return dims_.empty(); }

    bool has(std::string_view dim) const noexcept {
        return std::ranges::any_of(dims_, [&](const Dimension& d) { return d.first == dim; });
    }

    const std::string& at(std::string_view dim) const {
        for (const auto& d : dims_)
            if (d.first == dim) return d.second;
        throw UnknownDimensionError("GroupKey " + canonical() + " has no dimension '" + std::string(dim) + "'");
    }

    // Restriction to `dims`, in the order given.
    GroupKey project(std::span<const std::string> dims) const {
        std::vector<Dimension> out;
        out.reserve(dims.size());
        for (const auto& name : dims) out.emplace_back(name, at(name));
        return GroupKey(std::move(out));
    }

    GroupKey with(std::string name, std::string value) const {
        auto dims = dims_;
        dims.emplace_back(std::move(name), std::move(value));
        return GroupKey(std::move(dims));
    }

    std::string canonical() const {
        std::string out;
        for (const auto& [name, value] : dims_) {
            if (!out.empty()) out += '|';
            out += name;
            out += '=';
            out += value;
        }
        return out;
    }

    friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
    friend bool operator==(const GroupKey&, const GroupKey&) = default;

private:
    std::vector<Dimension> dims_;
};

struct DecisionRecord {
    double score = 0.0;
    bool outcome = false;
    GroupKey group;

    friend bool operator==(const DecisionRecord&, const DecisionRecord&) = default;
};

// (score, outcome) without the group; what the estimators and resamplers touch.
struct ScoredOutcome {
    double score = 0.0;
    bool outcome = false;
};

inline std::vector<ScoredOutcome> scored_outcomes(std::span<const DecisionRecord> records) {
    std::vector<ScoredOutcome> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back({r.score, r.outcome});
    return out;
}

// Cost of one false negative divided by the cost of one false positive.
class CostRatio {
public:
    explicit CostRatio(double c) : c_(c) {
        if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("CostRatio: must be positive and finite");
    }
    double value() const noexcept { return c_; }

private:
    double c_;
};

// decision_i = 1 iff score_i >= t.
inline std::vector<bool> apply_threshold(std::span<const double> scores, double t) {
    if (!std::isfinite(t)) throw DomainError("apply_threshold: threshold must be finite");
    std::vector<bool> out;
    out.reserve(scores.size());
    for (double s : scores) out.push_back(s >= t);
    return out;
}

inline std::vector<bool> apply_threshold(std::span<const DecisionRecord> records, double t) {
    if (!std::isfinite(t)) throw DomainError("apply_threshold: threshold must be finite");
    std::vector<bool> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.score >= t);
    return out;
}

struct ErrorCounts {
    std::size_t false_positives = 0;
    std::size_t false_negatives = 0;
};

template <std::ranges::sized_range D, std::ranges::sized_range Y>
ErrorCounts count_errors(const D& decisions, const Y& outcomes) {
    if (std::ranges::size(decisions) != std::ranges::size(outcomes))
        throw LengthMismatchError("decisions and outcomes differ in length");
    ErrorCounts e;
    auto y = std::ranges::begin(outcomes);
    for (auto&& d : decisions) {
        const bool decided = static_cast<bool>(d);
        const bool positive = static_cast<bool>(*y);
        if (decided && !positive) ++e.false_positives;
        if (!decided && positive) ++e.false_negatives;
        ++y;
    }
    return e;
}

// FP + c * FN.
template <std::ranges::sized_range D, std::ranges::sized_range Y>
double total_cost(const D& decisions, const Y& outcomes, CostRatio c) {
    const auto e = count_errors(decisions, outcomes);
    return static_cast<double>(e.false_positives) + c.value() * static_cast<double>(e.false_negatives);
}

// Outcome probability at the cost-minimizing threshold: 1 / (1 + c).
inline double optimal_implied_threshold(CostRatio c) { return 1.0 / (1.0 + c.value()); }

// Inverse of optimal_implied_threshold: (1 - tau) / tau, evaluated as 1/tau - 1.
inline CostRatio implied_cost_ratio(double implied_threshold) {
    const double tau = implied_threshold;
    if (!(tau >= 0.0 && tau <= 1.0)) throw DomainError("implied_cost_ratio: threshold must lie in [0, 1]");
    if (tau == 0.0) throw UndefinedRatioError("implied threshold 0 implies an infinite cost ratio");
    if (tau == 1.0) throw UndefinedRatioError("implied threshold 1 implies a zero cost ratio");
    const double c = 1.0 / tau - 1.0;
    if (!(c > 0.0) || !std::isfinite(c))
        throw UndefinedRatioError("implied threshold too close to 0 or 1 for a finite cost ratio");
    return CostRatio(c);
}

enum class CorrectionPolicy : std::uint8_t {
    None,
    HalfCount,  // rates of 0 or 1 become 1/(2n) or 1 - 1/(2n)
};

struct ConfusionSummary {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double fpr = 0.0;
    double fnr = 0.0;
    double prevalence = 0.0;
    bool correction_applied = false;

    std::size_t positives() const noexcept { return tp + fn; }
    std::size_t negatives() const noexcept { return fp + tn; }
    std::size_t total() const noexcept { return tp + fp + fn + tn; }

    friend bool operator==(const ConfusionSummary&, const ConfusionSummary&) = default;
};

inline ConfusionSummary confusion_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn,
                                              CorrectionPolicy correction) {
    ConfusionSummary s{tp, fp, fn, tn};
    // A rate with an empty denominator has no half-count either.
    if (s.positives() == 0 || s.negatives() == 0) {
        throw DegenerateClassError(s.positives() == 0 ? "no ground-truth positives"
                                                      : "no ground-truth negatives");
    }
    const auto corrected = [&](std::size_t errors, std::size_t n) {
        const double nn = static_cast<double>(n);
        double rate = static_cast<double>(errors) / nn;
        if (correction == CorrectionPolicy::HalfCount) {
            if (errors == 0) {
                rate = 1.0 / (2.0 * nn);
                s.correction_applied = true;
            } else if (errors == n) {
                rate = 1.0 - 1.0 / (2.0 * nn);
                s.correction_applied = true;
            }
        }
        return rate;
    };
    s.fpr = corrected(fp, s.negatives());
    s.fnr = corrected(fn, s.positives());
    s.prevalence = static_cast<double>(s.positives()) / static_cast<double>(s.total());
    return s;
}

template <std::ranges::sized_range L, std::ranges::sized_range T>
ConfusionSummary confusion(const L& labels, const T& truths, CorrectionPolicy correction) {
    if (std::ranges::size(labels) != std::ranges::size(truths))
        throw LengthMismatchError("labels and truths differ in length");
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    auto y = std::ranges::begin(truths);
    for (auto&& l : labels) {
        const bool label = static_cast<bool>(l);
        const bool truth = static_cast<bool>(*y);
        ++y;
        if (label && truth) ++tp;
        else if (label) ++fp;
        else if (truth) ++fn;
        else ++tn;
    }
    return confusion_from_counts(tp, fp, fn, tn, correction);
}

}  // namespace fairaudit
