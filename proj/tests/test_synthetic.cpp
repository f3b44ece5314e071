#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "fairaudit/label_audit.hpp"
#include "fairaudit/synthetic.hpp"

using namespace fairaudit;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const GroupKey kG{{"group", "g"}};

double integrate_pdf(const ScoreDensity& d) {
    // midpoint rule copes with integrable endpoint singularities
    const int n = 200000;
    double s = 0;
    for (int i = 0; i < n; ++i) s += d.pdf((i + 0.5) / n);
    return s / n;
}

double brute_auc(const std::vector<Signal>& sig) {
    double wins = 0, pairs = 0;
    for (const auto& p : sig) {
        if (!p.truth) continue;
        for (const auto& q : sig) {
            if (q.truth) continue;
            pairs += 1;
            wins += p.value > q.value ? 1.0 : (p.value == q.value ? 0.5 : 0.0);
        }
    }
    return wins / pairs;
}

std::span<const RiskCategory> cats(const RiskCategoryFixture& f, const std::string& g) { return f.groups.at(g); }

}  // namespace

TEST_CASE("densities integrate to one", "[density]") {
    for (const auto& d : {ScoreDensity::uniform(), ScoreDensity::truncated_exponential(8.0),
                          ScoreDensity::truncated_exponential(0.5), ScoreDensity::beta_distribution(2, 5),
                          ScoreDensity::beta_distribution(0.7, 1.3)})
        CHECK_THAT(integrate_pdf(d), WithinAbs(1.0, 2e-3));
    CHECK_THROWS_AS(ScoreDensity::truncated_exponential(0.0), InvalidModelError);
    CHECK_THROWS_AS(ScoreDensity::beta_distribution(-1, 2), InvalidModelError);
}

TEST_CASE("density samples have the right means", "[density]") {
    const auto mean_of = [](const ScoreDensity& d, std::uint64_t seed) {
        CounterRng rng(Seed{seed});
        double s = 0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            const double x = d.sample(rng);
            REQUIRE(x >= 0.0);
            REQUIRE(x <= 1.0);
            s += x;
        }
        return s / n;
    };
    CHECK_THAT(mean_of(ScoreDensity::uniform(), 1), WithinAbs(0.5, 0.003));
    // E[s] = 1/rate - 1/(e^rate - 1)
    CHECK_THAT(mean_of(ScoreDensity::truncated_exponential(8.0), 2), WithinAbs(1.0 / 8 - 1.0 / std::expm1(8.0), 0.002));
    CHECK_THAT(mean_of(ScoreDensity::beta_distribution(2, 5), 3), WithinAbs(2.0 / 7.0, 0.002));
    CHECK_THAT(mean_of(ScoreDensity::beta_distribution(0.5, 0.5), 4), WithinAbs(0.5, 0.003));
}

TEST_CASE("calibrations map into the unit interval", "[calibration]") {
    const auto a = Calibration::affine(2.0, -0.5);
    const auto l = Calibration::logistic(10.0, 0.5);
    for (double s = -1.0; s <= 2.0; s += 0.01) {
        for (const auto& c : {Calibration::identity(), a, l}) {
            CHECK(c(s) >= 0.0);
            CHECK(c(s) <= 1.0);
        }
    }
    CHECK(a(0.5) == 0.5);
    CHECK(l(0.5) == 0.5);
    CHECK_THROWS_AS(Calibration::affine(NAN, 0).validate(), InvalidModelError);
}

TEST_CASE("gen_scored", "[generator]") {
    const ScoreModel calibrated{ScoreDensity::uniform(), Calibration::identity()};
    const auto recs = gen_scored(calibrated, 1000000, kG, Seed{1});
    std::size_t in = 0, pos = 0;
    for (const auto& r : recs)
        if (std::abs(r.score - 0.8) <= 0.01) {
            ++in;
            pos += r.outcome;
        }
    CHECK_THAT(double(pos) / double(in), WithinAbs(0.8, 0.01));

    const ScoreModel never{ScoreDensity::uniform(), Calibration::affine(0.0, 0.0)};
    for (const auto& r : gen_scored(never, 1000, kG, Seed{2})) CHECK_FALSE(r.outcome);

    CHECK(gen_scored(calibrated, 500, kG, Seed{3}) == gen_scored(calibrated, 500, kG, Seed{3}));
    CHECK(gen_scored(calibrated, 500, kG, Seed{3}) != gen_scored(calibrated, 500, kG, Seed{4}));
    CHECK_THROWS_AS(gen_scored(calibrated, 0, kG, Seed{}), InvalidModelError);
}

TEST_CASE("generated records do not depend on n", "[generator][property]") {
    const ScoreModel model{ScoreDensity::beta_distribution(2, 3), Calibration::logistic(6, 0.4)};
    const auto small = gen_scored(model, 100, kG, Seed{9});
    const auto large = gen_scored(model, 1000, kG, Seed{9});
    CHECK(std::equal(small.begin(), small.end(), large.begin()));
}

TEST_CASE("gen_labels", "[generator]") {
    const SdtParams p{0.3, 1.2, 0.4};
    const auto recs = gen_labels(SdtWorld{p, {}}, 100000, kG, Seed{5}, 3);
    std::size_t fp = 0, neg = 0, fn = 0, pos = 0;
    for (const auto& r : recs) {
        if (r.truth) {
            ++pos;
            fn += !r.label;
        } else {
            ++neg;
            fp += r.label;
        }
    }
    CHECK_THAT(double(fp) / double(neg), WithinAbs(1.0 - std_normal_cdf(0.4), 0.01));
    CHECK_THAT(double(fn) / double(pos), WithinAbs(std_normal_cdf(0.4 - 1.2), 0.01));
    CHECK_THAT(double(pos) / 100000.0, WithinAbs(0.3, 0.01));
    CHECK(recs[0].labeler == "labeler-0");
    CHECK(recs[4].labeler == "labeler-1");
    CHECK(recs[7].item == "item-7");

    for (const auto& r : gen_labels(SdtWorld{SdtParams{0.5, 1.0, 10.0}, {}}, 10000, kG, Seed{6})) CHECK_FALSE(r.label);

    const GroupKey other{{"group", "h"}};
    const SdtWorld world{p, {{other, SdtParams{0.5, 0.0, 0.0}}}};
    CHECK(&world.params_for(other) != &world.base);
    CHECK(&world.params_for(kG) == &world.base);
    CHECK_THROWS_AS(gen_labels(SdtWorld{SdtParams{1.0, 1, 0}, {}}, 10, kG, Seed{}), InvalidModelError);
    CHECK_THROWS_AS(gen_labels(SdtWorld{p, {}}, 10, kG, Seed{}, 0), InvalidModelError);
}

TEST_CASE("empirical AUC", "[auc]") {
    const std::vector<Signal> tiny{{1, true}, {2, true}, {2, false}, {0, false}};
    CHECK(empirical_auc(tiny) == 0.625);
    const auto sig = gen_signals(SdtParams{0.4, 0.8, 0}, 600, Seed{7});
    CHECK_THAT(empirical_auc(sig), WithinAbs(brute_auc(sig), 1e-12));
    CHECK_THROWS_AS(empirical_auc(std::vector<Signal>{{1, true}}), DegenerateClassError);
}

TEST_CASE("expected cost is minimized at 1/(1+c)", "[cost]") {
    for (const auto& d : {ScoreDensity::uniform(), ScoreDensity::truncated_exponential(3.0),
                          ScoreDensity::beta_distribution(2, 5)}) {
        const ScoreModel model{d, Calibration::identity()};
        for (double c : {0.1, 1.0, 4.0}) {
            const double step = 0.001;
            double best_t = 0, best = INFINITY;
            for (int i = 0; i <= 1000; ++i) {
                const double v = expected_cost(model, i * step, CostRatio(c));
                if (v < best) {
                    best = v;
                    best_t = i * step;
                }
            }
            CHECK_THAT(best_t, WithinAbs(1.0 / (1.0 + c), step));
        }
    }
}

TEST_CASE("expected cost agrees with simulation", "[cost]") {
    const ScoreModel model{ScoreDensity::beta_distribution(2, 2), Calibration::identity()};
    const auto recs = gen_scored(model, 400000, kG, Seed{8});
    double cost = 0;
    for (const auto& r : recs) {
        const bool d = r.score >= 0.3;
        if (d && !r.outcome) cost += 1;
        if (!d && r.outcome) cost += 2.5;
    }
    CHECK_THAT(cost / double(recs.size()), WithinRel(expected_cost(model, 0.3, CostRatio(2.5)), 0.01));
}

TEST_CASE("cancer fixture", "[fixture]") {
    const auto f = cancer_fixture();
    const auto female = cats(f, "female");
    const auto male = cats(f, "male");
    CHECK_THAT(base_rate(female), WithinAbs(0.26, 0.005));
    CHECK_THAT(base_rate(male), WithinAbs(0.22, 0.005));

    // Treatment boundaries: female second-riskiest (1/4), male third-riskiest (1/6).
    CHECK(female[2].probability == 0.25);
    CHECK(male[1].probability == 1.0 / 6.0);
    CHECK(implied_cost_ratio(female[2].probability).value() == 3.0);
    CHECK(implied_cost_ratio(male[1].probability).value() == 5.0);
}

TEST_CASE("cancer fixture: optimal policies are thresholds at 0.2", "[fixture]") {
    const auto f = cancer_fixture();
    for (const auto& [g, c] : f.groups) {
        const auto best = optimal_policies(c, CostRatio(4.0));
        REQUIRE(best.size() == 1);
        CHECK(best[0] == threshold_policy(c, 0.2 + 1e-12));
        CHECK(is_threshold_policy(c, best[0]));
        // Treated means probability above 0.2.
        for (std::size_t i = 0; i < c.size(); ++i) CHECK(bool((best[0] >> i) & 1u) == (c[i].probability > 0.2));
    }
}

TEST_CASE("cancer fixture: every optimal policy is a threshold policy", "[fixture][property]") {
    const auto f = cancer_fixture();
    for (const auto& [g, c] : f.groups)
        for (double lc = -2.0; lc <= 2.0; lc += 0.01)
            for (auto p : optimal_policies(c, CostRatio(std::pow(10.0, lc)))) CHECK(is_threshold_policy(c, p));
}

TEST_CASE("cancer fixture: female indifference interval", "[fixture]") {
    const auto female = cats(cancer_fixture(), "female");
    const auto chosen = optimal_policies(female, CostRatio(4.0)).front();
    const auto still_optimal = [&](double tau) {
        const auto opt = optimal_policies(female, CostRatio(1.0 / tau - 1.0));
        return std::find(opt.begin(), opt.end(), chosen) != opt.end();
    };
    CHECK(still_optimal(1.0 / 6.0));
    CHECK(still_optimal(0.25));
    CHECK(still_optimal(0.2));
    CHECK_FALSE(still_optimal(1.0 / 6.0 - 1e-6));
    CHECK_FALSE(still_optimal(0.25 + 1e-6));
}

TEST_CASE("cancer fixture: equal implied thresholds, unequal FNR", "[fixture]") {
    const auto f = cancer_fixture();
    const auto female = cats(f, "female");
    const auto male = cats(f, "male");
    const double fnr_f = policy_fnr(female, threshold_policy(female, 0.2));
    const double fnr_m = policy_fnr(male, threshold_policy(male, 0.2));
    CHECK(fnr_m > fnr_f);
    CHECK_THAT(fnr_f, WithinAbs(0.22, 0.01));
}
