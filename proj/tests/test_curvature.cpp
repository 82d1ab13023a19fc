#include "spinecurve/curvature.hpp"
#include "spinecurve/synth.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace spinecurve;

TEST(ExtractCenters, Midpoint)
{
    const std::vector<DetBox> boxes { { 10, 20, 30, 60, 0.9 } };
    const auto chain = extract_centers(boxes, 0.5);
    ASSERT_EQ(chain.points.size(), 1u);
    EXPECT_EQ(chain.points[0], (Point2 { 20, 40 }));
}

TEST(ExtractCenters, ScoreThreshold)
{
    const std::vector<DetBox> boxes { { 10, 20, 30, 60, 0.9 }, { 10, 80, 30, 120, 0.3 } };
    const auto chain = extract_centers(boxes, 0.5);
    ASSERT_EQ(chain.points.size(), 1u);
    EXPECT_EQ(chain.points[0].y, 40.0);
    // The threshold is inclusive.
    EXPECT_EQ(extract_centers(boxes, 0.3).points.size(), 2u);
}

TEST(ExtractCenters, SortsByYThenXAndKeepsCoincidentCenters)
{
    const std::vector<DetBox> boxes {
        { 0, 100, 10, 120, 0.9 },
        { 20, 0, 40, 20, 0.9 },
        { 0, 0, 10, 20, 0.9 },
        { 0, 0, 10, 20, 0.8 },
    };
    const auto chain = extract_centers(boxes, 0.0);
    ASSERT_EQ(chain.points.size(), 4u);
    EXPECT_EQ(chain.points[0], (Point2 { 5, 10 }));
    EXPECT_EQ(chain.points[1], (Point2 { 5, 10 }));
    EXPECT_EQ(chain.points[2], (Point2 { 30, 10 }));
    EXPECT_EQ(chain.points[3], (Point2 { 5, 110 }));
}

TEST(ExtractCenters, PhantomCentersMatchGenerator)
{
    PhantomConfig cfg;
    cfg.noise_px = 0.0;
    cfg.fp_count = 0;
    cfg.dropout_rate = 0.0;
    cfg.seed = 5;
    const auto ph = gen_phantom(cfg);
    const auto chain = extract_centers(ph.record.detections, 0.0);
    ASSERT_EQ(chain.points.size(), 16u);
    for (std::size_t i = 0; i < 16; ++i) {
        EXPECT_NEAR(chain.points[i].x, ph.truth.true_centers[i].x, 1e-9);
        EXPECT_NEAR(chain.points[i].y, ph.truth.true_centers[i].y, 1e-9);
    }
}

TEST(MeasureCurvature, StraightSpineIsZero)
{
    CenterChain chain;
    for (int i = 0; i < 16; ++i) {
        chain.points.push_back({ 250.0, 100.0 + 40.0 * i });
    }
    const auto r = measure_curvature(chain);
    EXPECT_LE(r.angle_deg, 1e-6);
}

TEST(MeasureCurvature, UnitParabolaGivesNinetyDegrees)
{
    // x = 0.5 s^2 with y = s (one pixel per unit): slopes -1 and +1 at the ends.
    CenterChain chain;
    for (int i = 0; i < 12; ++i) {
        const double s = -1.0 + 2.0 * i / 11.0;
        chain.points.push_back({ 0.5 * s * s, s });
    }
    const auto r = measure_curvature(chain);
    EXPECT_EQ(r.apex_kind, ApexKind::stationary);
    EXPECT_NEAR(r.apex_y, 0.0, 1e-6);
    EXPECT_NEAR(r.y_upper, -1.0, 1e-12);
    EXPECT_NEAR(r.y_lower, 1.0, 1e-12);
    EXPECT_NEAR(r.slope_upper, -1.0, 1e-9);
    EXPECT_NEAR(r.slope_lower, 1.0, 1e-9);
    EXPECT_NEAR(r.angle_deg, 90.0, 1e-3);
}

TEST(MeasureCurvature, MonotoneCurveUsesChordFallback)
{
    CenterChain chain;
    for (int i = 0; i < 12; ++i) {
        const double y = 100.0 + 600.0 * i / 11.0;
        chain.points.push_back({ (y - 50.0) * (y - 50.0) / 400.0, y });
    }
    const auto r = measure_curvature(chain);
    EXPECT_EQ(r.apex_kind, ApexKind::chord_fallback);
    ASSERT_EQ(r.candidates.size(), 1u);
    EXPECT_LT(r.y_upper, r.apex_y);
    EXPECT_LT(r.apex_y, r.y_lower);
    // Steepest relative tangents are at the two domain ends.
    const double expected = tangent_angle_deg((100.0 - 50.0) / 200.0, (700.0 - 50.0) / 200.0);
    EXPECT_NEAR(r.angle_deg, expected, 1e-6);
}

TEST(MeasureCurvature, StandardPhantomRecoversGeneratorAngle)
{
    PhantomConfig cfg;
    cfg.n_laminae = 16;
    cfg.noise_px = 0.0;
    cfg.fp_count = 0;
    cfg.dropout_rate = 0.0;
    cfg.target_angle = 25.0;
    cfg.seed = 2024;
    const auto ph = gen_phantom(cfg);
    EXPECT_NEAR(ph.truth.true_angle_deg, 25.0, 0.1);
    const auto r = measure_curvature(extract_centers(ph.record.detections));
    EXPECT_NEAR(r.angle_deg, ph.truth.true_angle_deg, 0.01);
}

TEST(MeasureCurvature, TooFewPointsPropagates)
{
    CenterChain chain;
    for (int i = 0; i < 6; ++i) {
        chain.points.push_back({ 1.0 * i, 10.0 * i });
    }
    try {
        measure_curvature(chain);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::TooFewPoints);
    }
}

TEST(MeasureBatch, EmptyAndErrorIsolation)
{
    EXPECT_TRUE(measure_batch({}).empty());

    PhantomConfig cfg;
    cfg.seed = 3;
    auto good = gen_phantom(cfg, "good").record;
    ImageRecord starved { .id = "starved", .detections = { good.detections.begin(), good.detections.begin() + 3 },
        .ground_truth = {}, .width = {}, .height = {} };
    const std::vector<ImageRecord> records { good, starved, good };
    auto recs = records;
    recs[2].id = "good2";
    const auto out = measure_batch(recs);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_TRUE(out[0].ok());
    ASSERT_FALSE(out[1].ok());
    EXPECT_EQ(out[1].error().code(), ErrorCode::TooFewPoints);
    EXPECT_TRUE(out[2].ok());
    EXPECT_EQ(out[0].result(), out[2].result());
}

TEST(MeasureBatch, PhantomSuiteIsDeterministic)
{
    const auto suite = gen_suite(PhantomConfig {}, { .n_images = 30, .seed = 42 });
    const auto recs = suite.detection_records();
    const auto a = measure_batch(recs);
    const auto b = measure_batch(recs);
    ASSERT_EQ(a.size(), 30u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        ASSERT_TRUE(a[i].ok()) << a[i].id;
        EXPECT_EQ(a[i].result(), b[i].result());
    }
}

// ---------------------------------------------------------------------------
// Invariants over random chains.

namespace {

CurvatureResult measure_points(std::vector<Point2> pts) { return measure_curvature(oracle::chain_of(std::move(pts))); }

} // namespace

TEST(CurvatureProperties, SimilarityTranslationReflection)
{
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> scale(0.2, 5.0);
    std::uniform_real_distribution<double> shift(-1000.0, 1000.0);
    for (int trial = 0; trial < 200; ++trial) {
        const auto pts = oracle::random_chain(rng);
        const auto base = measure_points(pts);

        const double s = scale(rng);
        auto scaled = pts;
        for (auto& p : scaled) {
            p = { p.x * s, p.y * s };
        }
        EXPECT_NEAR(measure_points(scaled).angle_deg, base.angle_deg, 1e-6);

        const double dx = shift(rng);
        const double dy = shift(rng);
        auto moved = pts;
        for (auto& p : moved) {
            p = { p.x + dx, p.y + dy };
        }
        EXPECT_NEAR(measure_points(moved).angle_deg, base.angle_deg, 1e-6);

        auto mirrored = pts;
        for (auto& p : mirrored) {
            p.x = -p.x;
        }
        const auto m = measure_points(mirrored);
        EXPECT_NEAR(m.angle_deg, base.angle_deg, 1e-6);
        EXPECT_NEAR(m.slope_upper, -base.slope_upper, 1e-9);
        EXPECT_NEAR(m.slope_lower, -base.slope_lower, 1e-9);
    }
}

TEST(CurvatureProperties, BoxOrderDoesNotMatter)
{
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 50; ++trial) {
        const auto pts = oracle::random_chain(rng);
        std::vector<DetBox> boxes;
        for (const auto& p : pts) {
            boxes.push_back({ p.x - 60, p.y - 20, p.x + 60, p.y + 20, 0.9 });
        }
        const auto base = measure_curvature(extract_centers(boxes));
        std::shuffle(boxes.begin(), boxes.end(), rng);
        EXPECT_EQ(measure_curvature(extract_centers(boxes)), base);
    }
}

TEST(CurvatureProperties, CandidateDominanceAndTangentExtremality)
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const auto r = measure_points(oracle::random_chain(rng));
        ASSERT_FALSE(r.candidates.empty());
        double best = 0.0;
        for (const auto& c : r.candidates) {
            best = std::max(best, c.angle_deg);
        }
        EXPECT_EQ(r.angle_deg, best);
        EXPECT_GE(r.angle_deg, 0.0);
        EXPECT_LT(r.angle_deg, 180.0);

        const auto& c = r.curve;
        EXPECT_LE(c.y_lo(), r.y_upper);
        EXPECT_LT(r.y_upper, r.apex_y);
        EXPECT_LT(r.apex_y, r.y_lower);
        EXPECT_LE(r.y_lower, c.y_hi());

        // Rescan each section at ten times the grid density.
        const double apex_slope = eval_deriv(c, r.apex_y);
        const double up = std::abs(r.slope_upper - apex_slope);
        const double down = std::abs(r.slope_lower - apex_slope);
        constexpr int dense = 10240;
        for (int k = 0; k <= dense; ++k) {
            const double yu = c.y_lo() + (r.apex_y - c.y_lo()) * k / dense;
            const double yl = r.apex_y + (c.y_hi() - r.apex_y) * k / dense;
            ASSERT_GE(up + 1e-6, std::abs(eval_deriv(c, yu) - apex_slope));
            ASSERT_GE(down + 1e-6, std::abs(eval_deriv(c, yl) - apex_slope));
        }
    }
}
