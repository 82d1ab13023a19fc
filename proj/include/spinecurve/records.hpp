#pragma once

// Detection-side data model shared by the estimator, the evaluators and the
// file readers/writers.

#include "spinecurve/error.hpp"

#include <cmath>
#include <concepts>
#include <optional>
#include <string>
#include <vector>

namespace spinecurve {

/// Axis-aligned lamina-pair detection in corner form, with confidence.
struct DetBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;
    double score = 0.0;

    friend bool operator==(const DetBox&, const DetBox&) = default;
};

/// Annotated lamina-pair box.
struct GtBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    friend bool operator==(const GtBox&, const GtBox&) = default;
};

template <class Box>
concept AxisBox = requires(const Box& b) {
    { b.x_min } -> std::convertible_to<double>;
    { b.y_min } -> std::convertible_to<double>;
    { b.x_max } -> std::convertible_to<double>;
    { b.y_max } -> std::convertible_to<double>;
};

template <AxisBox Box>
bool box_geometry_valid(const Box& b) noexcept
{
    return std::isfinite(b.x_min) && std::isfinite(b.y_min) && std::isfinite(b.x_max) && std::isfinite(b.y_max)
        && b.x_min < b.x_max && b.y_min < b.y_max;
}

inline bool box_valid(const DetBox& b) noexcept
{
    return box_geometry_valid(b) && std::isfinite(b.score) && b.score >= 0.0 && b.score <= 1.0;
}

inline bool box_valid(const GtBox& b) noexcept { return box_geometry_valid(b); }

struct ImageRecord {
    std::string id;
    std::vector<DetBox> detections;
    std::optional<std::vector<GtBox>> ground_truth;
    std::optional<long long> width;
    std::optional<long long> height;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

/// One row of an angle table: automatic, ultrasound-manual and radiographic
/// Cobb measurements for the same subject, any of which may be missing.
struct AngleRecord {
    std::string id;
    std::optional<double> angle_auto;
    std::optional<double> angle_manual;
    std::optional<double> angle_cobb;

    friend bool operator==(const AngleRecord&, const AngleRecord&) = default;
};

inline bool angle_in_range(double deg) noexcept { return std::isfinite(deg) && deg >= 0.0 && deg < 180.0; }

} // namespace spinecurve
