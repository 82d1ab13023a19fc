#include "spinecurve/metrics.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace spinecurve;

namespace {

template <class Fn>
ErrorCode code_of(Fn&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected an Error";
    return ErrorCode::IoFailure;
}

} // namespace

TEST(Iou, HandComputedValues)
{
    const GtBox a { 0, 0, 2, 2 };
    const GtBox b { 1, 1, 3, 3 };
    EXPECT_NEAR(iou(a, b), 1.0 / 7.0, 1e-12);
    EXPECT_EQ(iou(a, a), 1.0);
    EXPECT_EQ(iou(a, GtBox { 5, 5, 6, 6 }), 0.0);
    // Touching edges do not overlap.
    EXPECT_EQ(iou(a, GtBox { 2, 0, 4, 2 }), 0.0);
}

TEST(Iou, SymmetricAndBounded)
{
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> pos(0.0, 100.0);
    std::uniform_real_distribution<double> size(0.1, 50.0);
    for (int i = 0; i < 2000; ++i) {
        const double ax = pos(rng), ay = pos(rng), bx = pos(rng), by = pos(rng);
        const GtBox a { ax, ay, ax + size(rng), ay + size(rng) };
        const DetBox b { bx, by, bx + size(rng), by + size(rng), 0.5 };
        const double v = iou(a, b);
        EXPECT_EQ(v, iou(b, a));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_NEAR(iou(b, b), 1.0, 1e-15);
    }
}

TEST(MatchDetections, SingleExactMatch)
{
    const std::vector<DetBox> dets { { 0, 0, 10, 10, 0.9 } };
    const std::vector<GtBox> gts { { 0, 0, 10, 10 } };
    const auto m = match_detections(dets, gts);
    ASSERT_EQ(m.flags.size(), 1u);
    EXPECT_TRUE(m.flags[0].is_tp);
    EXPECT_EQ(m.total_gt, 1u);
}

TEST(MatchDetections, GroundTruthConsumedOnce)
{
    const std::vector<DetBox> dets { { 0, 0, 10, 10, 0.8 }, { 0, 0, 10, 10, 0.9 } };
    const std::vector<GtBox> gts { { 0, 0, 10, 10 } };
    std::vector<bool> labels;
    const auto m = match_detections(dets, gts, 0.5, &labels);
    ASSERT_EQ(m.flags.size(), 2u);
    EXPECT_EQ(m.flags[0], (ScoredFlag { 0.9, true }));
    EXPECT_EQ(m.flags[1], (ScoredFlag { 0.8, false }));
    EXPECT_EQ(labels, (std::vector<bool> { false, true }));
}

TEST(MatchDetections, ThresholdAndTieBreak)
{
    const std::vector<GtBox> gts { { 0, 0, 2, 2 } };
    const std::vector<DetBox> low { { 1, 1, 3, 3, 0.9 } };
    EXPECT_FALSE(match_detections(low, gts).flags[0].is_tp);
    EXPECT_TRUE(match_detections(low, gts, 1.0 / 7.0).flags[0].is_tp);

    // Equal scores: the earlier input wins the GT.
    const std::vector<DetBox> tied { { 0, 0, 2, 2, 0.7 }, { 0, 0, 2, 2, 0.7 } };
    std::vector<bool> labels;
    match_detections(tied, gts, 0.5, &labels);
    EXPECT_EQ(labels, (std::vector<bool> { true, false }));
}

TEST(AveragePrecision, HandComputedValues)
{
    MatchOutcome perfect { { { 0.9, true }, { 0.8, true } }, 2 };
    EXPECT_EQ(average_precision(perfect), 1.0);

    // FP@0.9 then TP@0.8 with one GT: PR points (0, 0) and (1, 0.5).
    MatchOutcome one { { { 0.9, false }, { 0.8, true } }, 1 };
    EXPECT_NEAR(average_precision(one), 0.5, 1e-12);

    MatchOutcome none { {}, 3 };
    EXPECT_EQ(average_precision(none), 0.0);

    EXPECT_EQ(code_of([] { average_precision(MatchOutcome { { { 0.9, false } }, 0 }); }), ErrorCode::NoGroundTruth);
}

TEST(AveragePrecision, RandomSmallInstancesMatchBruteForce)
{
    std::mt19937_64 rng(32);
    std::uniform_int_distribution<int> n_det(0, 5);
    std::uniform_int_distribution<int> n_gt(1, 3);
    std::uniform_real_distribution<double> score(0.0, 1.0);
    for (int trial = 0; trial < 5000; ++trial) {
        MatchOutcome m;
        m.total_gt = static_cast<std::size_t>(n_gt(rng));
        std::size_t tps = 0;
        const int n = n_det(rng);
        for (int i = 0; i < n; ++i) {
            const bool tp = tps < m.total_gt && score(rng) < 0.5;
            tps += tp ? 1 : 0;
            m.flags.push_back({ score(rng), tp });
        }
        auto ranked = m.flags;
        std::stable_sort(ranked.begin(), ranked.end(), [](auto& a, auto& b) { return a.score > b.score; });
        EXPECT_NEAR(average_precision(m), oracle::brute_force_ap(ranked, m.total_gt), 1e-12);
    }
}

TEST(AveragePrecision, MonotonicityProperties)
{
    std::mt19937_64 rng(33);
    std::uniform_real_distribution<double> score(0.1, 0.9);
    std::uniform_int_distribution<int> n_det(1, 8);
    for (int trial = 0; trial < 2000; ++trial) {
        MatchOutcome m;
        m.total_gt = 6;
        std::size_t tps = 0;
        const int n = n_det(rng);
        for (int i = 0; i < n; ++i) {
            const bool tp = tps < m.total_gt - 1 && score(rng) < 0.5;
            tps += tp ? 1 : 0;
            m.flags.push_back({ score(rng), tp });
        }
        const double ap = average_precision(m);
        EXPECT_GE(ap, 0.0);
        EXPECT_LE(ap, 1.0);

        auto with_fp = m;
        with_fp.flags.push_back({ 0.01, false });
        EXPECT_LE(average_precision(with_fp), ap);

        auto with_tp = m;
        with_tp.flags.push_back({ 0.99, true });
        EXPECT_GE(average_precision(with_tp), ap);
    }
}

TEST(MadSd, HandComputedValues)
{
    const std::vector<double> same { 10, 20, 30 };
    const auto z = mad_sd(same, same);
    EXPECT_EQ(z.mad, 0.0);
    EXPECT_EQ(z.sd, 0.0);

    const std::vector<double> pred { 10, 20 };
    const std::vector<double> ref { 12, 24 };
    const auto m = mad_sd(pred, ref);
    EXPECT_NEAR(m.mad, 3.0, 1e-12);
    EXPECT_NEAR(m.sd, std::sqrt(2.0), 1e-12);

    const std::vector<double> one_p { 5 };
    const std::vector<double> one_r { 7.5 };
    const auto single = mad_sd(one_p, one_r);
    EXPECT_EQ(single.mad, 2.5);
    EXPECT_EQ(single.sd, 0.0);
}

TEST(MadSd, Errors)
{
    const std::vector<double> a { 1, 2 };
    const std::vector<double> b { 1 };
    const std::vector<double> empty;
    EXPECT_EQ(code_of([&] { mad_sd(a, b); }), ErrorCode::LengthMismatch);
    EXPECT_EQ(code_of([&] { mad_sd(empty, empty); }), ErrorCode::EmptyInput);
}

TEST(MadSd, ShiftInvariantAndMatchesTwoPassRecomputation)
{
    std::mt19937_64 rng(34);
    std::uniform_real_distribution<double> angle(10.0, 45.0);
    std::normal_distribution<double> err(0.0, 4.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> pred(30);
        std::vector<double> ref(30);
        for (std::size_t i = 0; i < 30; ++i) {
            ref[i] = angle(rng);
            pred[i] = ref[i] + err(rng);
        }
        const auto m = mad_sd(pred, ref);

        // Straightforward recomputation.
        double sum = 0.0;
        for (std::size_t i = 0; i < 30; ++i) {
            sum += std::fabs(pred[i] - ref[i]);
        }
        const double mean = sum / 30.0;
        double ss = 0.0;
        for (std::size_t i = 0; i < 30; ++i) {
            const double d = std::fabs(pred[i] - ref[i]) - mean;
            ss += d * d;
        }
        EXPECT_NEAR(m.mad, mean, 1e-9);
        EXPECT_NEAR(m.sd, std::sqrt(ss / 29.0), 1e-9);

        const double c = 7.0;
        auto pc = pred;
        auto rc = ref;
        for (std::size_t i = 0; i < 30; ++i) {
            pc[i] += c;
            rc[i] += c;
        }
        const auto shifted = mad_sd(pc, rc);
        EXPECT_NEAR(shifted.mad, m.mad, 1e-12);
        EXPECT_NEAR(shifted.sd, m.sd, 1e-12);
    }
}

TEST(PearsonR, HandComputedValues)
{
    const std::vector<double> a { 1, 2, 3, 4 };
    std::vector<double> lin;
    std::vector<double> neg;
    for (double v : a) {
        lin.push_back(2 * v + 1);
        neg.push_back(-v);
    }
    EXPECT_NEAR(pearson_r(a, lin), 1.0, 1e-12);
    EXPECT_NEAR(pearson_r(a, neg), -1.0, 1e-12);
    const std::vector<double> b { 2, 1, 4, 3 };
    EXPECT_NEAR(pearson_r(a, b), 0.6, 1e-12);
}

TEST(PearsonR, Errors)
{
    const std::vector<double> a { 1, 2, 3 };
    const std::vector<double> flat { 5, 5, 5 };
    const std::vector<double> one { 1 };
    const std::vector<double> two { 1, 2 };
    EXPECT_EQ(code_of([&] { pearson_r(a, flat); }), ErrorCode::ConstantSeries);
    EXPECT_EQ(code_of([&] { pearson_r(one, one); }), ErrorCode::TooFewPoints);
    EXPECT_EQ(code_of([&] { pearson_r(a, two); }), ErrorCode::LengthMismatch);
}

TEST(PearsonR, AffineInvariance)
{
    std::mt19937_64 rng(35);
    std::uniform_real_distribution<double> v(-10.0, 10.0);
    std::uniform_real_distribution<double> pos(0.1, 10.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> a(12);
        std::vector<double> b(12);
        for (std::size_t i = 0; i < 12; ++i) {
            a[i] = v(rng);
            b[i] = 0.5 * a[i] + v(rng);
        }
        const double alpha = pos(rng), beta = v(rng), gamma = pos(rng), delta = v(rng);
        auto a2 = a;
        auto b2 = b;
        for (std::size_t i = 0; i < 12; ++i) {
            a2[i] = alpha * a[i] + beta;
            b2[i] = gamma * b[i] + delta;
        }
        const double r = pearson_r(a, b);
        EXPECT_NEAR(pearson_r(a2, b2), r, 1e-9);
        EXPECT_GE(r, -1.0);
        EXPECT_LE(r, 1.0);
    }
}
