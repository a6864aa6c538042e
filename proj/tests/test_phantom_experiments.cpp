#include "kseg/error.hpp"
#include "kseg/experiments.hpp"
#include "kseg/phantom.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

using namespace kseg;

namespace {

std::vector<Case> noiseless_cases(int count) {
    std::vector<Case> cases;
    for (int i = 0; i < count; ++i) {
        PhantomSpec spec = PhantomSpec::for_preset(PhantomPreset::CleanEllipse, 200 + i);
        spec.speckle = 0.0;
        const Phantom ph = make_phantom(spec);
        cases.push_back({"noiseless-" + std::to_string(i), ph.image, phantom_init_points(ph), ph.truth});
    }
    return cases;
}

}  // namespace

TEST(Phantom, PresetNames) {
    for (auto p : {PhantomPreset::CleanEllipse, PhantomPreset::WeakBoundary, PhantomPreset::HighSpeckle})
        EXPECT_EQ(parse_preset(to_string(p)), p);
    EXPECT_THROW(parse_preset("noisy"), Error);
}

TEST(Phantom, SameSeedIsBitIdentical) {
    for (auto p : {PhantomPreset::CleanEllipse, PhantomPreset::WeakBoundary, PhantomPreset::HighSpeckle}) {
        const Phantom a = make_phantom(p, 9);
        const Phantom b = make_phantom(p, 9);
        EXPECT_TRUE(std::ranges::equal(a.image.data(), b.image.data()));
        EXPECT_EQ(a.truth, b.truth);
    }
}

TEST(Phantom, DistinctSeedsGiveDistinctSpeckle) {
    PhantomSpec a = PhantomSpec::for_preset(PhantomPreset::HighSpeckle, 1);
    PhantomSpec b = PhantomSpec::for_preset(PhantomPreset::HighSpeckle, 2);
    EXPECT_FALSE(std::ranges::equal(make_phantom(a).image.data(), make_phantom(b).image.data()));
}

TEST(Phantom, NoiselessCleanEllipseIsTwoValuedEllipseRaster) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PhantomSpec spec = PhantomSpec::for_preset(PhantomPreset::CleanEllipse, seed);
        spec.speckle = 0.0;
        const Phantom ph = make_phantom(spec);
        const auto& s = ph.shape;
        EXPECT_GE(2 * s.semi_a, 60.0);
        EXPECT_LE(2 * s.semi_a, 90.0);
        EXPECT_GE(2 * s.semi_b, 60.0);
        EXPECT_LE(2 * s.semi_b, 90.0);
        int mismatches = 0;
        for (int y = 0; y < 256; ++y)
            for (int x = 0; x < 256; ++x) {
                const double dx = x - s.cx, dy = y - s.cy;
                const double u = dx * std::cos(s.rotation) + dy * std::sin(s.rotation);
                const double v = -dx * std::sin(s.rotation) + dy * std::cos(s.rotation);
                const bool in = (u / s.semi_a) * (u / s.semi_a) + (v / s.semi_b) * (v / s.semi_b) <= 1.0;
                mismatches += in != ph.truth.at(x, y);
                EXPECT_EQ(ph.image.at(x, y), ph.truth.at(x, y) ? 0.35 : 0.65);
            }
        EXPECT_LE(mismatches, 2) << "seed " << seed;
    }
}

TEST(Phantom, TruthIsOneComponentOfPlausibleSize) {
    for (auto p : {PhantomPreset::CleanEllipse, PhantomPreset::WeakBoundary, PhantomPreset::HighSpeckle})
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Phantom ph = make_phantom(p, seed);
            EXPECT_EQ(count_components4(ph.truth), 1);
            EXPECT_GT(ph.truth.count(), 2000u);
            EXPECT_LT(ph.truth.count(), 7000u);
            for (double v : ph.image.data()) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
}

namespace {

struct ArcContrast {
    double gap_in = 0, gap_out = 0, rest_in = 0, rest_out = 0;
    int n_gap_in = 0, n_gap_out = 0, n_rest_in = 0, n_rest_out = 0;

    double gap() const { return std::abs(gap_in / n_gap_in - gap_out / n_gap_out); }
    double rest() const { return std::abs(rest_in / n_rest_in - rest_out / n_rest_out); }
};

// Pixels within 12 px of the boundary, split by side and by whether their
// polar angle falls in the gap arc.
void sample_arc(const Phantom& ph, ArcContrast& acc) {
    const double half = ph.spec.gap_degrees * std::numbers::pi / 360.0;
    for (int y = 0; y < ph.image.height(); ++y)
        for (int x = 0; x < ph.image.width(); ++x) {
            const double dx = x - ph.shape.cx, dy = y - ph.shape.cy;
            const double phi = std::atan2(dy, dx);
            const double excess = std::hypot(dx, dy) - ph.shape.radius_at(phi);
            if (std::abs(excess) > 12) continue;
            const double off = std::remainder(phi - ph.gap_center, 2 * std::numbers::pi);
            const double v = ph.image.at(x, y);
            if (std::abs(off) <= half) {
                (excess <= 0 ? acc.gap_in : acc.gap_out) += v;
                ++(excess <= 0 ? acc.n_gap_in : acc.n_gap_out);
            } else if (std::abs(off) > 2 * half) {
                (excess <= 0 ? acc.rest_in : acc.rest_out) += v;
                ++(excess <= 0 ? acc.n_rest_in : acc.n_rest_out);
            }
        }
}

}  // namespace

TEST(Phantom, WeakBoundaryArcHasNoContrastWithoutSpeckle) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        PhantomSpec spec = PhantomSpec::for_preset(PhantomPreset::WeakBoundary, seed);
        spec.speckle = 0.0;
        ArcContrast acc;
        sample_arc(make_phantom(spec), acc);
        EXPECT_LT(acc.gap(), 0.05) << "seed " << seed;
        EXPECT_NEAR(acc.rest(), 0.3, 1e-12) << "seed " << seed;
    }
}

TEST(Phantom, WeakBoundaryArcHasNoContrastUnderSpeckle) {
    ArcContrast pooled;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ArcContrast acc;
        sample_arc(make_phantom(PhantomPreset::WeakBoundary, seed), acc);
        EXPECT_GT(acc.rest(), 0.2) << "seed " << seed;
        sample_arc(make_phantom(PhantomPreset::WeakBoundary, seed), pooled);
    }
    EXPECT_LT(pooled.gap(), 0.05);
}

TEST(Phantom, InitPointsLieInsideTruth) {
    const Phantom ph = make_phantom(PhantomPreset::WeakBoundary, 5);
    const Contour c = phantom_init_points(ph);
    ASSERT_EQ(c.points.size(), 8u);
    for (const auto& p : c.points) EXPECT_TRUE(ph.shape.inside(p.x, p.y));
    const Contour j = jitter_points(c, 3.0, 77, 256, 256);
    for (std::size_t i = 0; i < c.points.size(); ++i) {
        EXPECT_LE(std::abs(j.points[i].x - c.points[i].x), 3.0);
        EXPECT_LE(std::abs(j.points[i].y - c.points[i].y), 3.0);
    }
    EXPECT_THROW(phantom_init_points(ph, 2), Error);
}

TEST(ParallelFor, RunsEveryIndexAndRethrows) {
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 3, [](std::size_t i) {
                     if (i == 5) throw Error(ErrorCode::Io, "boom");
                 }),
                 Error);
}

TEST(EvaluateCase, FailureIsRecordedNotThrown) {
    const Phantom ph = make_phantom(PhantomPreset::CleanEllipse, 0);
    const Case c{"c0", ph.image, phantom_init_points(ph), ph.truth};
    const CaseOutcome bad = evaluate_case(c, Contour{{{10, 10}, {20, 20}, {30, 30}}}, SegConfig{}, "s");
    EXPECT_FALSE(bad.ok);
    EXPECT_EQ(bad.error_code, "degenerate_contour");
    const CaseOutcome good = evaluate_case(c, c.init, SegConfig{}, "s");
    EXPECT_TRUE(good.ok);
    EXPECT_GE(good.metrics.dice, 0.95);
}

TEST(GridSpec, JsonRoundTripAndValidation) {
    const GridSpec d;
    const GridSpec back = GridSpec::from_json(d.to_json());
    EXPECT_EQ(back.scales_options, d.scales_options);
    EXPECT_EQ(back.directions_options, d.directions_options);
    EXPECT_EQ(back.sigma_options, d.sigma_options);
    EXPECT_THROW(GridSpec::from_json(nlohmann::json{{"scales_options", nlohmann::json::array()}}), Error);
    EXPECT_THROW(GridSpec::from_json(nlohmann::json{{"sigma_options", {-1.0}}}), Error);
    EXPECT_THROW(GridSpec::from_json(nlohmann::json{{"directions_options", {0}}}), Error);
    EXPECT_THROW(GridSpec::from_json(nlohmann::json{{"scales", {3}}}), Error);
    const GridSpec one = GridSpec::from_json(nlohmann::json{{"scales_options", {3}}});
    EXPECT_EQ(one.scales_options, std::vector<int>{3});
    EXPECT_EQ(one.directions_options, d.directions_options);
}

TEST(GridSearch, OneSettingEqualsBatchEvaluation) {
    const auto cases = phantom_cases(PhantomPreset::CleanEllipse, 0, 3);
    GridSpec spec;
    spec.scales_options = {3};
    spec.directions_options = {8};
    spec.sigma_options = {0.1};
    const GridResult r = grid_search(cases, spec, SegConfig{});
    ASSERT_EQ(r.rows.size(), 1u);
    double total = 0.0, dist = 0.0;
    for (const auto& c : cases) {
        const CaseOutcome o = evaluate_case(c, c.init, SegConfig{}, "x");
        total += o.metrics.dice;
        dist += o.metrics.mean_distance;
    }
    EXPECT_NEAR(r.rows[0].mean_dice, total / 3, 1e-15);
    EXPECT_NEAR(r.rows[0].mean_distance, dist / 3, 1e-12);
    EXPECT_EQ(r.rows[0].succeeded, 3);
    EXPECT_EQ(r.outcomes.size(), 3u);
}

TEST(GridSearch, RankedAndIndependentOfWorkerCount) {
    const auto cases = phantom_cases(PhantomPreset::HighSpeckle, 0, 2);
    GridSpec spec;
    spec.scales_options = {2, 3};
    spec.directions_options = {4};
    spec.sigma_options = {1.0, 0.1};
    const GridResult a = grid_search(cases, spec, SegConfig{}, 1);
    const GridResult b = grid_search(cases, spec, SegConfig{}, 2);
    std::ostringstream ca, cb;
    write_grid_csv(ca, a);
    write_grid_csv(cb, b);
    EXPECT_EQ(ca.str(), cb.str());
    EXPECT_EQ(ca.str().rfind("rank,scales,directions,sigma,mean_dice,mean_distance,succeeded,failed\n", 0), 0u);
    // A setting drops out of the table only when every case failed under it.
    std::set<std::string> failed_everywhere;
    for (const auto& o : a.outcomes) failed_everywhere.insert(o.setting);
    for (const auto& o : a.outcomes)
        if (o.ok) failed_everywhere.erase(o.setting);
    EXPECT_EQ(a.rows.size() + failed_everywhere.size(), 4u);
    EXPECT_EQ(a.outcomes.size(), 8u);
    for (std::size_t i = 1; i < a.rows.size(); ++i) EXPECT_GE(a.rows[i - 1].mean_dice, a.rows[i].mean_dice);
    std::ostringstream oa;
    write_outcomes_csv(oa, a.outcomes);
    EXPECT_EQ(oa.str().rfind("case,setting,status,dice,", 0), 0u);
}

TEST(Ablation, ModeNames) {
    EXPECT_EQ(parse_ablation_mode("feature_set"), AblationMode::FeatureSet);
    EXPECT_EQ(parse_ablation_mode("weight-mode"), AblationMode::WeightMode);
    EXPECT_EQ(parse_ablation_mode("init_jitter"), AblationMode::InitJitter);
    EXPECT_THROW(parse_ablation_mode("speckle"), Error);
}

TEST(Ablation, NoiselessPhantomIntensityAndCombinedReachHighDice) {
    const auto cases = noiseless_cases(3);
    const AblationResult r = ablation_run(cases, AblationMode::FeatureSet, SegConfig{});
    ASSERT_EQ(r.variants.size(), 3u);
    for (const auto& c : cases)
        for (const char* v : {"intensity", "both"}) EXPECT_GE(r.dice_of(c.id, v), 0.95) << c.id << " " << v;
}

TEST(Ablation, NoiselessPhantomGaborOnlyCutsOutsideTheEdge) {
    // The fused map of a step edge is a ridge on the edge; alone it places
    // the cut on the ridge's outer flank, a few pixels out.
    const auto cases = noiseless_cases(3);
    SegConfig cfg;
    cfg.feature_set = FeatureSet::Gabor;
    for (const auto& c : cases) {
        const SegResult r = run(c.image, c.init, cfg);
        EXPECT_GE(dice(r.mask, c.truth), 0.85) << c.id;
        EXPECT_GT(r.mask.count(), c.truth.count()) << c.id;
    }
}

TEST(Ablation, RegionalTermNeverHurts) {
    // Ties are expected: the regional weight is numerically tiny at default sigma.
    auto cases = phantom_cases(PhantomPreset::WeakBoundary, 0, 2);
    for (auto& c : phantom_cases(PhantomPreset::HighSpeckle, 0, 2)) cases.push_back(std::move(c));
    const AblationResult r = ablation_run(cases, AblationMode::WeightMode, SegConfig{});
    for (const auto& c : cases) EXPECT_GE(r.dice_of(c.id, "both") + 1e-9, r.dice_of(c.id, "pixel")) << c.id;
    const auto j = r.summary_json();
    EXPECT_EQ(j["mode"], "weight_mode");
}

TEST(Ablation, JitterGivesHighAgreement) {
    const auto cases = phantom_cases(PhantomPreset::CleanEllipse, 0, 4);
    AblationOptions opt;
    opt.jitter_repetitions = 3;
    opt.seed = 5;
    const AblationResult r = ablation_run(cases, AblationMode::InitJitter, SegConfig{}, opt);
    ASSERT_TRUE(r.icc_dice.has_value());
    EXPECT_EQ(r.variants.size(), 3u);
    EXPECT_EQ(r.outcomes.size(), 12u);
    const AblationResult again = ablation_run(cases, AblationMode::InitJitter, SegConfig{}, opt);
    EXPECT_EQ(r.summary_json().dump(), again.summary_json().dump());
}
