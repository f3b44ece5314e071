#pragma once
// Generative models with known ground truth for every estimator, and the
// desk-scale cancer-treatment fixture.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "fairaudit/decision_core.hpp"
#include "fairaudit/errors.hpp"
#include "fairaudit/label_audit.hpp"
#include "fairaudit/stat_kernel.hpp"

namespace fairaudit {

// Score density on [0, 1].
struct ScoreDensity {
    enum class Kind : std::uint8_t { Uniform, TruncatedExponential, Beta };

    Kind kind = Kind::Uniform;
    double rate = 0.0;        // truncated exponential, density proportional to exp(-rate * s)
    double alpha = 1.0;       // beta
    double beta = 1.0;

    static ScoreDensity uniform() { return {}; }
    static ScoreDensity truncated_exponential(double rate) {
        ScoreDensity d;
        d.kind = Kind::TruncatedExponential;
        d.rate = rate;
        d.validate();
        return d;
    }
    static ScoreDensity beta_distribution(double a, double b) {
        ScoreDensity d;
        d.kind = Kind::Beta;
        d.alpha = a;
        d.beta = b;
        d.validate();
        return d;
    }

    void validate() const {
        if (kind == Kind::TruncatedExponential && (!(rate > 0.0) || !std::isfinite(rate)))
            throw InvalidModelError("truncated exponential rate must be positive and finite");
        if (kind == Kind::Beta && (!(alpha > 0.0) || !(beta > 0.0) || !std::isfinite(alpha) || !std::isfinite(beta)))
            throw InvalidModelError("beta shape parameters must be positive and finite");
    }

    double pdf(double s) const {
        if (s < 0.0 || s > 1.0) return 0.0;
        switch (kind) {
        case Kind::Uniform: return 1.0;
        case Kind::TruncatedExponential: return rate * std::exp(-rate * s) / -std::expm1(-rate);
        case Kind::Beta: {
            if ((s == 0.0 && alpha < 1.0) || (s == 1.0 && beta < 1.0)) return std::numeric_limits<double>::infinity();
            const double log_b = std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
            return std::exp((alpha - 1.0) * std::log(s) + (beta - 1.0) * std::log1p(-s) - log_b);
        }
        }
        return 0.0;
    }

    double sample(CounterRng& rng) const {
        switch (kind) {
        case Kind::Uniform: return rng.uniform();
        case Kind::TruncatedExponential: return -std::log1p(rng.uniform() * std::expm1(-rate)) / rate;
        case Kind::Beta: {
            const double x = sample_gamma(rng, alpha);
            const double y = sample_gamma(rng, beta);
            return x / (x + y);
        }
        }
        return 0.0;
    }

private:
    // Marsaglia-Tsang; shapes below 1 use the u^(1/shape) boost.
    static double sample_gamma(CounterRng& rng, double shape) {
        if (shape < 1.0) return sample_gamma(rng, shape + 1.0) * std::pow(rng.uniform_open(), 1.0 / shape);
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            const double x = rng.normal();
            double v = 1.0 + c * x;
            if (v <= 0.0) continue;
            v = v * v * v;
            const double u = rng.uniform_open();
            if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
        }
    }
};

// Map from score to outcome probability.
struct Calibration {
    enum class Kind : std::uint8_t { Identity, Affine, Logistic };

    Kind kind = Kind::Identity;
    double slope = 1.0;
    double offset = 0.0;  // affine: intercept; logistic: centre

    static Calibration identity() { return {}; }
    // clamp(intercept + slope * s, 0, 1)
    static Calibration affine(double slope, double intercept) { return {Kind::Affine, slope, intercept}; }
    // 1 / (1 + exp(-slope * (s - centre)))
    static Calibration logistic(double slope, double centre) { return {Kind::Logistic, slope, centre}; }

    void validate() const {
        if (!std::isfinite(slope) || !std::isfinite(offset)) throw InvalidModelError("calibration parameters must be finite");
    }

    double operator()(double s) const {
        switch (kind) {
        case Kind::Identity: return std::clamp(s, 0.0, 1.0);
        case Kind::Affine: return std::clamp(offset + slope * s, 0.0, 1.0);
        case Kind::Logistic: return 1.0 / (1.0 + std::exp(-slope * (s - offset)));
        }
        return 0.0;
    }
};

struct ScoreModel {
    ScoreDensity density;
    Calibration calibration;
};

// Record i draws from the sub-stream CounterRng(seed).derive(i): score first,
// then the outcome, so any chunk of records can be generated independently.
inline std::vector<DecisionRecord> gen_scored(const ScoreModel& model, std::size_t n, const GroupKey& group, Seed seed) {
    if (n == 0) throw InvalidModelError("gen_scored: n must be at least 1");
    model.density.validate();
    model.calibration.validate();
    const CounterRng root(seed);
    std::vector<DecisionRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng = root.derive(i);
        const double s = model.density.sample(rng);
        const bool y = rng.uniform() < model.calibration(s);
        out.push_back({s, y, group});
    }
    return out;
}

struct SdtParams {
    double prevalence = 0.5;
    double separation = 1.0;
    double criterion = 0.5;

    void validate() const {
        if (!(prevalence > 0.0 && prevalence < 1.0)) throw InvalidModelError("SDT prevalence must lie in (0, 1)");
        if (!std::isfinite(separation) || !std::isfinite(criterion))
            throw InvalidModelError("SDT separation and criterion must be finite");
    }
};

struct SdtWorld {
    SdtParams base;
    std::map<GroupKey, SdtParams> overrides;

    const SdtParams& params_for(const GroupKey& group) const {
        const auto it = overrides.find(group);
        return it == overrides.end() ? base : it->second;
    }
};

struct Signal {
    double value = 0.0;
    bool truth = false;
};

// truth ~ Bernoulli(phi); signal ~ N(truth * d', 1). Two draws for the truth
// and Box-Muller per record, from the record's own sub-stream.
inline std::vector<Signal> gen_signals(const SdtParams& p, std::size_t n, Seed seed) {
    if (n == 0) throw InvalidModelError("gen_signals: n must be at least 1");
    p.validate();
    const CounterRng root(seed);
    std::vector<Signal> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng = root.derive(i);
        const bool truth = rng.uniform() < p.prevalence;
        out.push_back({rng.normal() + (truth ? p.separation : 0.0), truth});
    }
    return out;
}

// label = 1{signal >= t}. Labelers are assigned round-robin.
inline std::vector<LabelRecord> gen_labels(const SdtWorld& world, std::size_t n, const GroupKey& group, Seed seed,
                                           std::size_t labelers = 1) {
    if (labelers == 0) throw InvalidModelError("gen_labels: need at least one labeler");
    const SdtParams& p = world.params_for(group);
    const auto signals = gen_signals(p, n, seed);
    std::vector<LabelRecord> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back({signals[i].value >= p.criterion, signals[i].truth, "labeler-" + std::to_string(i % labelers),
                       "item-" + std::to_string(i), group});
    }
    return out;
}

// Mann-Whitney estimate of P(positive signal > negative signal), ties count half.
inline double empirical_auc(std::vector<Signal> signals) {
    std::sort(signals.begin(), signals.end(), [](const Signal& a, const Signal& b) { return a.value < b.value; });
    double rank_sum = 0.0;
    std::size_t positives = 0;
    for (std::size_t i = 0; i < signals.size();) {
        std::size_t j = i;
        while (j < signals.size() && signals[j].value == signals[i].value) ++j;
        const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            if (signals[k].truth) {
                rank_sum += mid_rank;
                ++positives;
            }
        }
        i = j;
    }
    const std::size_t negatives = signals.size() - positives;
    if (positives == 0 || negatives == 0) throw DegenerateClassError("empirical_auc: need both classes");
    const double np = static_cast<double>(positives);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(negatives));
}

// Expected FP + c * FN per case when thresholding at t, by composite Simpson
// quadrature of density * calibration on [0, t] and [t, 1].
inline double expected_cost(const ScoreModel& model, double t, CostRatio c, std::size_t panels = 2048) {
    const auto simpson = [&](double lo, double hi, auto&& f) {
        if (hi <= lo) return 0.0;
        const double h = (hi - lo) / static_cast<double>(2 * panels);
        double acc = f(lo) + f(hi);
        for (std::size_t i = 1; i < 2 * panels; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(lo + h * static_cast<double>(i));
        return acc * h / 3.0;
    };
    const double tt = std::clamp(t, 0.0, 1.0);
    const double fn = simpson(0.0, tt, [&](double s) { return model.density.pdf(s) * model.calibration(s); });
    const double fp = simpson(tt, 1.0, [&](double s) { return model.density.pdf(s) * (1.0 - model.calibration(s)); });
    return fp + c.value() * fn;
}

// ---------------------------------------------------------------------------
// Risk-category fixture

struct RiskCategory {
    double probability = 0.0;  // chance a case in the category is positive
    double count = 0.0;
};

// Categories per group, listed from lowest to highest risk.
struct RiskCategoryFixture {
    std::map<std::string, std::vector<RiskCategory>> groups;
};

// Four shared risk levels (1/20, 1/6, 1/4, 3/5). The counts are fixed here
// and give base rates of about 0.26 (female) and 0.22 (male).
inline RiskCategoryFixture cancer_fixture() {
    RiskCategoryFixture f;
    f.groups["female"] = {{1.0 / 20.0, 60}, {1.0 / 6.0, 60}, {1.0 / 4.0, 52}, {3.0 / 5.0, 55}};
    f.groups["male"] = {{1.0 / 20.0, 20}, {1.0 / 6.0, 48}, {1.0 / 4.0, 12}, {3.0 / 5.0, 15}};
    return f;
}

// Bit i set: treat category i.
using CategoryPolicy = std::uint32_t;

inline double policy_cost(std::span<const RiskCategory> cats, CategoryPolicy treat, CostRatio c) {
    double cost = 0.0;
    for (std::size_t i = 0; i < cats.size(); ++i) {
        const auto& k = cats[i];
        cost += (treat >> i) & 1u ? k.count * (1.0 - k.probability) : c.value() * k.count * k.probability;
    }
    return cost;
}

// Treat every category whose probability is at least tau.
inline CategoryPolicy threshold_policy(std::span<const RiskCategory> cats, double tau) {
    CategoryPolicy treat = 0;
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (cats[i].probability >= tau) treat |= 1u << i;
    return treat;
}

// Every treated category is at least as risky as every untreated one.
inline bool is_threshold_policy(std::span<const RiskCategory> cats, CategoryPolicy treat) {
    for (std::size_t i = 0; i < cats.size(); ++i)
        for (std::size_t j = 0; j < cats.size(); ++j)
            if (((treat >> i) & 1u) && !((treat >> j) & 1u) && cats[i].probability < cats[j].probability) return false;
    return true;
}

// All policies attaining the minimum cost, found by enumerating all 2^k.
inline std::vector<CategoryPolicy> optimal_policies(std::span<const RiskCategory> cats, CostRatio c) {
    if (cats.size() > 20) throw InputError("optimal_policies: too many categories to enumerate");
    const CategoryPolicy end = CategoryPolicy{1} << cats.size();
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> costs(end);
    for (CategoryPolicy p = 0; p < end; ++p) {
        costs[p] = policy_cost(cats, p, c);
        best = std::min(best, costs[p]);
    }
    std::vector<CategoryPolicy> out;
    const double tol = 1e-9 * std::max(1.0, std::abs(best));
    for (CategoryPolicy p = 0; p < end; ++p)
        if (costs[p] <= best + tol) out.push_back(p);
    return out;
}

inline double expected_positives(std::span<const RiskCategory> cats) {
    double pos = 0.0;
    for (const auto& k : cats) pos += k.count * k.probability;
    return pos;
}

inline double base_rate(std::span<const RiskCategory> cats) {
    double n = 0.0;
    for (const auto& k : cats) n += k.count;
    return expected_positives(cats) / n;
}

// Expected share of positives left untreated.
inline double policy_fnr(std::span<const RiskCategory> cats, CategoryPolicy treat) {
    double missed = 0.0;
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (!((treat >> i) & 1u)) missed += cats[i].count * cats[i].probability;
    return missed / expected_positives(cats);
}

}  // namespace fairaudit
