#pragma once

// Spinal curvature estimator: box centers -> fitted curve -> apex ->
// steepest tangents on either side -> proxy Cobb angle.

#include "spinecurve/error.hpp"
#include "spinecurve/geometry.hpp"
#include "spinecurve/records.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace spinecurve {

inline constexpr double kDefaultMinScore = 0.5;

enum class ApexKind { stationary, chord_fallback };

constexpr std::string_view to_string(ApexKind kind) noexcept
{
    return kind == ApexKind::stationary ? "stationary" : "chord_fallback";
}

struct CenterChain {
    std::vector<Point2> points; // ascending y
    std::string source_image;
};

struct ApexCandidate {
    double apex_y = 0.0;
    double angle_deg = 0.0;

    friend bool operator==(const ApexCandidate&, const ApexCandidate&) = default;
};

struct CurvatureResult {
    double angle_deg = 0.0;
    double apex_y = 0.0;
    double y_upper = 0.0;
    double y_lower = 0.0;
    double slope_upper = 0.0;
    double slope_lower = 0.0;
    SpineCurve curve;
    std::vector<ApexCandidate> candidates;
    ApexKind apex_kind = ApexKind::stationary;

    friend bool operator==(const CurvatureResult&, const CurvatureResult&) = default;
};

inline double radians_to_degrees(double rad) noexcept { return rad * 180.0 / std::numbers::pi; }

/// Angle between two lines of slope dx/dy, through their inclinations.
inline double tangent_angle_deg(double slope_a, double slope_b) noexcept
{
    return radians_to_degrees(std::abs(std::atan(slope_a) - std::atan(slope_b)));
}

/// Box centers with score >= min_score, sorted by y then x then input index.
inline CenterChain extract_centers(std::span<const DetBox> detections, double min_score = kDefaultMinScore,
    std::string source_image = {})
{
    struct Indexed {
        Point2 p;
        std::size_t index;
    };
    std::vector<Indexed> kept;
    for (std::size_t i = 0; i < detections.size(); ++i) {
        const auto& b = detections[i];
        if (b.score >= min_score) {
            kept.push_back({ { 0.5 * (b.x_min + b.x_max), 0.5 * (b.y_min + b.y_max) }, i });
        }
    }
    std::sort(kept.begin(), kept.end(), [](const Indexed& a, const Indexed& b) {
        if (a.p.y != b.p.y) {
            return a.p.y < b.p.y;
        }
        if (a.p.x != b.p.x) {
            return a.p.x < b.p.x;
        }
        return a.index < b.index;
    });
    CenterChain chain;
    chain.source_image = std::move(source_image);
    chain.points.reserve(kept.size());
    for (const auto& k : kept) {
        chain.points.push_back(k.p);
    }
    return chain;
}

namespace detail {

struct TangentPoint {
    double y;
    double slope;
};

/// Grid point of maximal |f'(y) - f'(apex)| on the section between `from`
/// and `apex` (both included). Scans from `from` towards the apex, so ties go
/// to the point farthest from the apex.
inline TangentPoint steepest_relative_tangent(const SpineCurve& curve, double from, double apex, double apex_slope)
{
    constexpr int n = kSearchGrid;
    TangentPoint best { from, eval_deriv(curve, from) };
    double best_change = std::abs(best.slope - apex_slope);
    for (int k = 1; k < n; ++k) {
        const double y = grid_point(from, apex, k, n);
        const double s = eval_deriv(curve, y);
        const double change = std::abs(s - apex_slope);
        if (change > best_change) {
            best_change = change;
            best = { y, s };
        }
    }
    return best;
}

} // namespace detail

/// Steps after fitting: locate apexes (stationary points of f', or the
/// chord-deviation point when there are none), find the steepest relative
/// tangents above and below each apex, and keep the apex with the largest
/// angle.
inline CurvatureResult measure_curve(const SpineCurve& curve)
{
    auto apexes = find_stationary_points(curve);
    auto kind = ApexKind::stationary;
    if (apexes.empty()) {
        apexes.push_back(max_chord_deviation_point(curve));
        kind = ApexKind::chord_fallback;
    }

    CurvatureResult result { .curve = curve, .candidates = {}, .apex_kind = kind };
    bool have_best = false;
    for (double apex : apexes) {
        const double apex_slope = eval_deriv(curve, apex);
        const auto upper = detail::steepest_relative_tangent(curve, curve.y_lo(), apex, apex_slope);
        const auto lower = detail::steepest_relative_tangent(curve, curve.y_hi(), apex, apex_slope);
        const double angle = tangent_angle_deg(upper.slope, lower.slope);
        result.candidates.push_back({ apex, angle });
        if (!have_best || angle > result.angle_deg) {
            have_best = true;
            result.angle_deg = angle;
            result.apex_y = apex;
            result.y_upper = upper.y;
            result.y_lower = lower.y;
            result.slope_upper = upper.slope;
            result.slope_lower = lower.slope;
        }
    }
    return result;
}

inline CurvatureResult measure_curvature(const CenterChain& chain, int degree = kDefaultDegree)
{
    return measure_curve(fit_polynomial(chain.points, degree));
}

struct BatchEntry {
    std::string id;
    std::variant<CurvatureResult, Error> outcome;

    bool ok() const noexcept { return std::holds_alternative<CurvatureResult>(outcome); }
    const CurvatureResult& result() const { return std::get<CurvatureResult>(outcome); }
    const Error& error() const { return std::get<Error>(outcome); }
};

/// Measures every image independently; a failing image yields an error entry
/// and does not affect the others. Output order follows input order.
inline std::vector<BatchEntry> measure_batch(std::span<const ImageRecord> records, double min_score = kDefaultMinScore,
    int degree = kDefaultDegree)
{
    std::vector<BatchEntry> out;
    out.reserve(records.size());
    for (const auto& rec : records) {
        try {
            const auto chain = extract_centers(rec.detections, min_score, rec.id);
            out.push_back({ rec.id, measure_curvature(chain, degree) });
        } catch (const Error& e) {
            out.push_back({ rec.id, e });
        }
    }
    return out;
}

} // namespace spinecurve
