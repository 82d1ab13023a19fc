#pragma once

// Detector and angle-agreement evaluation: IoU, greedy matching, all-point
// interpolated AP, MAD +- SD of absolute differences, Pearson R.

#include "spinecurve/error.hpp"
#include "spinecurve/records.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace spinecurve {

inline constexpr double kDefaultIouThreshold = 0.5;

template <AxisBox A, AxisBox B>
double iou(const A& a, const B& b) noexcept
{
    const double iw = std::min<double>(a.x_max, b.x_max) - std::max<double>(a.x_min, b.x_min);
    const double ih = std::min<double>(a.y_max, b.y_max) - std::max<double>(a.y_min, b.y_min);
    if (iw <= 0.0 || ih <= 0.0) {
        return 0.0;
    }
    const double inter = iw * ih;
    const double area_a = (a.x_max - a.x_min) * (a.y_max - a.y_min);
    const double area_b = (b.x_max - b.x_min) * (b.y_max - b.y_min);
    return inter / (area_a + area_b - inter);
}

struct ScoredFlag {
    double score = 0.0;
    bool is_tp = false;

    friend bool operator==(const ScoredFlag&, const ScoredFlag&) = default;
};

/// TP/FP labels of detections, in the order they were matched (descending
/// score within an image), plus the number of ground-truth boxes.
struct MatchOutcome {
    std::vector<ScoredFlag> flags;
    std::size_t total_gt = 0;

    void append(const MatchOutcome& other)
    {
        flags.insert(flags.end(), other.flags.begin(), other.flags.end());
        total_gt += other.total_gt;
    }

    std::size_t tp_count() const noexcept
    {
        return static_cast<std::size_t>(std::count_if(flags.begin(), flags.end(), [](const ScoredFlag& f) { return f.is_tp; }));
    }
};

/// Greedy matching for one image. Detections are visited by descending score
/// (ties by input index); each takes the still-unmatched GT box of highest
/// IoU if that IoU reaches the threshold.
/// `tp_by_input`, when given, receives the label of each detection at its
/// input position.
inline MatchOutcome match_detections(std::span<const DetBox> dets, std::span<const GtBox> gts,
    double iou_threshold = kDefaultIouThreshold, std::vector<bool>* tp_by_input = nullptr)
{
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), std::size_t { 0 });
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

    std::vector<bool> taken(gts.size(), false);
    MatchOutcome out;
    out.total_gt = gts.size();
    out.flags.reserve(dets.size());
    if (tp_by_input) {
        tp_by_input->assign(dets.size(), false);
    }
    for (std::size_t idx : order) {
        double best_iou = -1.0;
        std::size_t best_gt = gts.size();
        for (std::size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) {
                continue;
            }
            const double v = iou(dets[idx], gts[g]);
            if (v > best_iou) {
                best_iou = v;
                best_gt = g;
            }
        }
        const bool tp = best_gt < gts.size() && best_iou >= iou_threshold;
        if (tp) {
            taken[best_gt] = true;
        }
        out.flags.push_back({ dets[idx].score, tp });
        if (tp_by_input) {
            (*tp_by_input)[idx] = tp;
        }
    }
    return out;
}

/// Area under the monotone precision envelope (all-point interpolation).
/// Flags are ranked by descending score; equal scores keep pooled order.
inline double average_precision(const MatchOutcome& outcome)
{
    if (outcome.total_gt == 0) {
        throw Error(ErrorCode::NoGroundTruth, "average precision needs at least one ground-truth box");
    }
    std::vector<ScoredFlag> ranked = outcome.flags;
    std::stable_sort(ranked.begin(), ranked.end(), [](const ScoredFlag& a, const ScoredFlag& b) { return a.score > b.score; });

    const auto n = ranked.size();
    const double total = static_cast<double>(outcome.total_gt);
    std::vector<double> recall(n);
    std::vector<double> precision(n);
    std::size_t tp = 0;
    for (std::size_t i = 0; i < n; ++i) {
        tp += ranked[i].is_tp ? 1 : 0;
        recall[i] = static_cast<double>(tp) / total;
        precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
    }
    for (std::size_t i = n; i-- > 1;) {
        precision[i - 1] = std::max(precision[i - 1], precision[i]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (recall[i] > prev_recall) {
            ap += (recall[i] - prev_recall) * precision[i];
            prev_recall = recall[i];
        }
    }
    return ap;
}

struct AgreementStats {
    double mad = 0.0;
    double sd = 0.0;
    double r = 0.0;
    std::size_t n = 0;
};

struct MadSd {
    double mad = 0.0;
    double sd = 0.0;
};

namespace detail {

inline void require_same_length(std::size_t a, std::size_t b)
{
    if (a != b) {
        throw Error(ErrorCode::LengthMismatch, "series lengths differ: " + std::to_string(a) + " vs " + std::to_string(b));
    }
}

} // namespace detail

/// Mean of |pred - ref| and the sample (n-1) SD of the same absolute
/// differences; SD is 0 for a single pair.
inline MadSd mad_sd(std::span<const double> pred, std::span<const double> ref)
{
    detail::require_same_length(pred.size(), ref.size());
    if (pred.empty()) {
        throw Error(ErrorCode::EmptyInput, "mad_sd needs at least one pair");
    }
    const auto n = pred.size();
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) {
        diff[i] = std::abs(pred[i] - ref[i]);
    }
    const double mean = std::accumulate(diff.begin(), diff.end(), 0.0) / static_cast<double>(n);
    if (n == 1) {
        return { mean, 0.0 };
    }
    double ss = 0.0;
    for (double d : diff) {
        ss += (d - mean) * (d - mean);
    }
    return { mean, std::sqrt(ss / static_cast<double>(n - 1)) };
}

inline double pearson_r(std::span<const double> a, std::span<const double> b)
{
    detail::require_same_length(a.size(), b.size());
    const auto n = a.size();
    if (n < 2) {
        throw Error(ErrorCode::TooFewPoints, "pearson_r needs at least two pairs");
    }
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(n);
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / static_cast<double>(n);
    double saa = 0.0;
    double sbb = 0.0;
    double sab = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = a[i] - mean_a;
        const double db = b[i] - mean_b;
        saa += da * da;
        sbb += db * db;
        sab += da * db;
    }
    if (saa == 0.0 || sbb == 0.0) {
        throw Error(ErrorCode::ConstantSeries, "correlation is undefined for a constant series");
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline AgreementStats agreement(std::span<const double> pred, std::span<const double> ref)
{
    const auto m = mad_sd(pred, ref);
    return { m.mad, m.sd, pearson_r(pred, ref), pred.size() };
}

} // namespace spinecurve
