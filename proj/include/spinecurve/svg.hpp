#pragma once

// SVG overlay of a measurement on image pixel coordinates (y downward).

#include "spinecurve/curvature.hpp"
#include "spinecurve/detection_io.hpp"
#include "spinecurve/records.hpp"

#include <algorithm>
#include <optional>
#include <sstream>
#include <string>

namespace spinecurve {

namespace detail {

inline std::string px(double v) { return format_fixed(v, 2); }

inline std::string xml_escape(const std::string& s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

/// "--" is not allowed inside XML comments.
inline std::string comment_safe(const std::string& s)
{
    std::string out;
    for (char c : s) {
        if (c == '-' && !out.empty() && out.back() == '-') {
            out += ' ';
        }
        out += c;
    }
    return out;
}

} // namespace detail

/// Renders detections, their centers, the fitted curve (256 segments), both
/// tangent lines, the apex and the angle label. `result` may be absent when
/// the image could not be measured; `note` then ends up as a comment.
inline std::string render_overlay(const ImageRecord& record, const std::optional<CurvatureResult>& result,
    const std::string& note = {})
{
    using detail::px;
    double width = record.width ? static_cast<double>(*record.width) : 0.0;
    double height = record.height ? static_cast<double>(*record.height) : 0.0;
    if (!record.width || !record.height) {
        double max_x = 1.0;
        double max_y = 1.0;
        for (const auto& b : record.detections) {
            max_x = std::max(max_x, b.x_max);
            max_y = std::max(max_y, b.y_max);
        }
        if (result) {
            max_y = std::max(max_y, result->curve.y_hi());
        }
        width = record.width ? width : max_x + 20.0;
        height = record.height ? height : max_y + 20.0;
    }

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << px(width) << "\" height=\"" << px(height)
        << "\" viewBox=\"0 0 " << px(width) << ' ' << px(height) << "\">\n"
        << "<title>" << detail::xml_escape(record.id) << "</title>\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << px(width) << "\" height=\"" << px(height) << "\" fill=\"black\"/>\n";

    if (record.detections.empty()) {
        svg << "<!-- no detections for image " << detail::comment_safe(record.id) << " -->\n";
    }
    if (!note.empty()) {
        svg << "<!-- " << detail::comment_safe(note) << " -->\n";
    }

    svg << "<g id=\"detections\" fill=\"none\" stroke=\"white\" stroke-width=\"1.5\">\n";
    for (const auto& b : record.detections) {
        svg << "<rect x=\"" << px(b.x_min) << "\" y=\"" << px(b.y_min) << "\" width=\"" << px(b.x_max - b.x_min)
            << "\" height=\"" << px(b.y_max - b.y_min) << "\"/>\n";
    }
    svg << "</g>\n<g id=\"centers\" fill=\"yellow\">\n";
    for (const auto& b : record.detections) {
        svg << "<circle cx=\"" << px(0.5 * (b.x_min + b.x_max)) << "\" cy=\"" << px(0.5 * (b.y_min + b.y_max))
            << "\" r=\"3\"/>\n";
    }
    svg << "</g>\n";

    if (result) {
        const auto& c = result->curve;
        constexpr int segments = 256;
        svg << "<polyline id=\"curve\" fill=\"none\" stroke=\"lime\" stroke-width=\"2\" points=\"";
        for (int k = 0; k <= segments; ++k) {
            const double y = k == segments ? c.y_hi() : c.y_lo() + c.span() * k / segments;
            svg << (k ? " " : "") << px(eval_curve(c, y)) << ',' << px(y);
        }
        svg << "\"/>\n";

        // Tangent lines x = x0 + m (y - y0), drawn across the curve's domain.
        auto tangent = [&](const char* id, double y0, double slope) {
            const double x0 = eval_curve(c, y0);
            const double ya = c.y_lo();
            const double yb = c.y_hi();
            svg << "<line id=\"" << id << "\" x1=\"" << px(x0 + slope * (ya - y0)) << "\" y1=\"" << px(ya) << "\" x2=\""
                << px(x0 + slope * (yb - y0)) << "\" y2=\"" << px(yb) << "\" stroke=\"red\" stroke-width=\"1.5\"/>\n";
        };
        tangent("tangent-upper", result->y_upper, result->slope_upper);
        tangent("tangent-lower", result->y_lower, result->slope_lower);

        svg << "<circle id=\"apex\" cx=\"" << px(eval_curve(c, result->apex_y)) << "\" cy=\"" << px(result->apex_y)
            << "\" r=\"6\" fill=\"none\" stroke=\"cyan\" stroke-width=\"2\"/>\n";
        svg << "<text id=\"angle\" x=\"10.00\" y=\"30.00\" fill=\"white\" font-size=\"24\">"
            << format_fixed(result->angle_deg, 1) << "°</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

} // namespace spinecurve
