#pragma once

// JSON detection/annotation files, JSON result files and CSV angle tables.
//
// Detection file:
//   {"format_version":1?, "images":[{"id":"..", "width":int?, "height":int?,
//     "detections":[{"bbox":[x_min,y_min,x_max,y_max],"score":f}],
//     "ground_truth":[{"bbox":[...]}]?}]}
//
// Result file: one entry per image, either a full measurement or
//   {"id":"..","error":"<code>"}. Angles are written with 4 decimals.

#include "spinecurve/curvature.hpp"
#include "spinecurve/error.hpp"
#include "spinecurve/geometry.hpp"
#include "spinecurve/records.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <cstdio>
#include <istream>
#include <iterator>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace spinecurve {

inline constexpr int kFormatVersion = 1;

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_double(double v)
{
    std::array<char, 64> buf {};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    std::string s(buf.data(), res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) {
        s += ".0";
    }
    return s;
}

inline std::string format_fixed(double v, int decimals)
{
    std::array<char, 64> buf {};
    const int len = std::snprintf(buf.data(), buf.size(), "%.*f", decimals, v);
    return std::string(buf.data(), static_cast<std::size_t>(len));
}

namespace detail {

using nlohmann::json;

inline std::string read_all(std::istream& in)
{
    return { std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>() };
}

inline json parse_json_text(std::istream& in)
{
    try {
        return json::parse(read_all(in));
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::MalformedJson, e.what());
    }
}

inline const json& require_field(const json& obj, const char* key, const std::string& path)
{
    const auto it = obj.find(key);
    if (it == obj.end()) {
        throw Error(ErrorCode::SchemaViolation, path + "/" + key + ": missing required field");
    }
    return *it;
}

inline double require_number(const json& v, const std::string& path)
{
    if (!v.is_number()) {
        throw Error(ErrorCode::SchemaViolation, path + ": expected a number");
    }
    return v.get<double>();
}

inline std::array<double, 4> parse_bbox(const json& entry, const std::string& path)
{
    if (!entry.is_object()) {
        throw Error(ErrorCode::SchemaViolation, path + ": expected an object");
    }
    const auto& bbox = require_field(entry, "bbox", path);
    if (!bbox.is_array() || bbox.size() != 4) {
        throw Error(ErrorCode::SchemaViolation, path + "/bbox: expected an array of 4 numbers");
    }
    std::array<double, 4> out {};
    for (std::size_t i = 0; i < 4; ++i) {
        out[i] = require_number(bbox[i], path + "/bbox/" + std::to_string(i));
    }
    return out;
}

inline std::optional<long long> optional_int(const json& obj, const char* key, const std::string& path)
{
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) {
        return std::nullopt;
    }
    if (!it->is_number_integer()) {
        throw Error(ErrorCode::SchemaViolation, path + "/" + key + ": expected an integer");
    }
    return it->get<long long>();
}

inline const json& images_array(const json& doc)
{
    if (!doc.is_object()) {
        throw Error(ErrorCode::SchemaViolation, "/: expected an object");
    }
    if (const auto it = doc.find("format_version"); it != doc.end()) {
        if (!it->is_number_integer() || it->get<long long>() != kFormatVersion) {
            throw Error(ErrorCode::SchemaViolation, "/format_version: unsupported version");
        }
    }
    const auto& images = require_field(doc, "images", "");
    if (!images.is_array()) {
        throw Error(ErrorCode::SchemaViolation, "/images: expected an array");
    }
    return images;
}

inline std::string parse_image_id(const json& img, const std::string& path, std::set<std::string>& seen)
{
    if (!img.is_object()) {
        throw Error(ErrorCode::SchemaViolation, path + ": expected an object");
    }
    const auto& id_field = require_field(img, "id", path);
    if (!id_field.is_string()) {
        throw Error(ErrorCode::SchemaViolation, path + "/id: expected a string");
    }
    auto id = id_field.get<std::string>();
    if (id.empty()) {
        throw Error(ErrorCode::InvariantViolation, path + "/id: image id must be non-empty");
    }
    if (!seen.insert(id).second) {
        throw Error(ErrorCode::InvariantViolation, "image '" + id + "': duplicate image id");
    }
    return id;
}

inline json bbox_json(double x_min, double y_min, double x_max, double y_max)
{
    return json::array({ x_min, y_min, x_max, y_max });
}

} // namespace detail

inline std::vector<ImageRecord> parse_detection_file(std::istream& in)
{
    using detail::json;
    const json doc = detail::parse_json_text(in);
    const auto& images = detail::images_array(doc);

    std::vector<ImageRecord> out;
    out.reserve(images.size());
    std::set<std::string> seen;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto& img = images[i];
        const std::string path = "/images/" + std::to_string(i);
        ImageRecord rec;
        rec.id = detail::parse_image_id(img, path, seen);
        rec.width = detail::optional_int(img, "width", path);
        rec.height = detail::optional_int(img, "height", path);
        if ((rec.width && *rec.width < 0) || (rec.height && *rec.height < 0)) {
            throw Error(ErrorCode::InvariantViolation, "image '" + rec.id + "': width/height must be non-negative");
        }

        const auto& dets = detail::require_field(img, "detections", path);
        if (!dets.is_array()) {
            throw Error(ErrorCode::SchemaViolation, path + "/detections: expected an array");
        }
        for (std::size_t j = 0; j < dets.size(); ++j) {
            const std::string dpath = path + "/detections/" + std::to_string(j);
            const auto bb = detail::parse_bbox(dets[j], dpath);
            const double score = detail::require_number(detail::require_field(dets[j], "score", dpath), dpath + "/score");
            const DetBox box { bb[0], bb[1], bb[2], bb[3], score };
            if (!box_valid(box)) {
                throw Error(ErrorCode::InvariantViolation,
                    "image '" + rec.id + "' at " + dpath + ": box needs x_min < x_max, y_min < y_max and score in [0,1]");
            }
            rec.detections.push_back(box);
        }

        if (const auto it = img.find("ground_truth"); it != img.end() && !it->is_null()) {
            if (!it->is_array()) {
                throw Error(ErrorCode::SchemaViolation, path + "/ground_truth: expected an array");
            }
            std::vector<GtBox> gts;
            for (std::size_t j = 0; j < it->size(); ++j) {
                const std::string gpath = path + "/ground_truth/" + std::to_string(j);
                const auto bb = detail::parse_bbox((*it)[j], gpath);
                const GtBox box { bb[0], bb[1], bb[2], bb[3] };
                if (!box_valid(box)) {
                    throw Error(ErrorCode::InvariantViolation,
                        "image '" + rec.id + "' at " + gpath + ": box needs x_min < x_max and y_min < y_max");
                }
                gts.push_back(box);
            }
            rec.ground_truth = std::move(gts);
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline void write_detection_file(std::span<const ImageRecord> records, std::ostream& out)
{
    using detail::json;
    json images = json::array();
    for (const auto& rec : records) {
        json img = json::object();
        img["id"] = rec.id;
        if (rec.width) {
            img["width"] = *rec.width;
        }
        if (rec.height) {
            img["height"] = *rec.height;
        }
        json dets = json::array();
        for (const auto& b : rec.detections) {
            dets.push_back({ { "bbox", detail::bbox_json(b.x_min, b.y_min, b.x_max, b.y_max) }, { "score", b.score } });
        }
        img["detections"] = std::move(dets);
        if (rec.ground_truth) {
            json gts = json::array();
            for (const auto& b : *rec.ground_truth) {
                gts.push_back({ { "bbox", detail::bbox_json(b.x_min, b.y_min, b.x_max, b.y_max) } });
            }
            img["ground_truth"] = std::move(gts);
        }
        images.push_back(std::move(img));
    }
    // One image per line keeps files diffable.
    out << "{\"format_version\":" << kFormatVersion << ",\"images\":[";
    for (std::size_t i = 0; i < images.size(); ++i) {
        out << (i ? ",\n" : "\n") << images[i].dump();
    }
    out << (images.empty() ? "]}\n" : "\n]}\n");
    if (!out) {
        throw Error(ErrorCode::IoFailure, "failed writing detection file");
    }
}

/// One entry of a result file as read back.
struct ResultEntry {
    std::string id;
    std::optional<CurvatureResult> result;
    std::string error; // error code, set when result is empty
};

namespace detail {

inline std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

inline void write_result_object(std::ostream& out, const std::string& id, const CurvatureResult& r)
{
    const auto& c = r.curve;
    out << "{\"id\":" << json_string(id)
        << ",\"angle_deg\":" << format_fixed(r.angle_deg, 4)
        << ",\"apex_y\":" << format_double(r.apex_y)
        << ",\"y_upper\":" << format_double(r.y_upper)
        << ",\"y_lower\":" << format_double(r.y_lower)
        << ",\"slope_upper\":" << format_double(r.slope_upper)
        << ",\"slope_lower\":" << format_double(r.slope_lower)
        << ",\"apex_kind\":\"" << to_string(r.apex_kind) << "\""
        << ",\"curve\":{\"degree\":" << c.degree() << ",\"coeffs\":[";
    for (std::size_t k = 0; k < c.coeffs().size(); ++k) {
        out << (k ? "," : "") << format_double(c.coeffs()[k]);
    }
    out << "],\"y_offset\":" << format_double(c.y_offset())
        << ",\"y_scale\":" << format_double(c.y_scale())
        << ",\"domain\":[" << format_double(c.y_lo()) << "," << format_double(c.y_hi()) << "]}"
        << ",\"candidates\":[";
    for (std::size_t k = 0; k < r.candidates.size(); ++k) {
        out << (k ? "," : "") << "[" << format_double(r.candidates[k].apex_y) << ","
            << format_fixed(r.candidates[k].angle_deg, 4) << "]";
    }
    out << "]}";
}

inline CurvatureResult parse_result_object(const json& img, const std::string& path)
{
    auto num = [&](const char* key) { return require_number(require_field(img, key, path), path + "/" + key); };
    const auto& curve_j = require_field(img, "curve", path);
    const std::string cpath = path + "/curve";
    if (!curve_j.is_object()) {
        throw Error(ErrorCode::SchemaViolation, cpath + ": expected an object");
    }
    const auto& coeffs_j = require_field(curve_j, "coeffs", cpath);
    const auto& domain_j = require_field(curve_j, "domain", cpath);
    if (!coeffs_j.is_array() || !domain_j.is_array() || domain_j.size() != 2) {
        throw Error(ErrorCode::SchemaViolation, cpath + ": coeffs must be an array and domain a pair");
    }
    std::vector<double> coeffs;
    for (std::size_t k = 0; k < coeffs_j.size(); ++k) {
        coeffs.push_back(require_number(coeffs_j[k], cpath + "/coeffs/" + std::to_string(k)));
    }
    const auto& degree_j = require_field(curve_j, "degree", cpath);
    if (!degree_j.is_number_integer() || degree_j.get<long long>() + 1 != static_cast<long long>(coeffs.size())) {
        throw Error(ErrorCode::SchemaViolation, cpath + "/degree: must be an integer matching the coefficient count");
    }
    SpineCurve curve(std::move(coeffs), require_number(require_field(curve_j, "y_offset", cpath), cpath + "/y_offset"),
        require_number(require_field(curve_j, "y_scale", cpath), cpath + "/y_scale"),
        require_number(domain_j[0], cpath + "/domain/0"), require_number(domain_j[1], cpath + "/domain/1"));

    const auto& kind_j = require_field(img, "apex_kind", path);
    if (!kind_j.is_string() || (kind_j != "stationary" && kind_j != "chord_fallback")) {
        throw Error(ErrorCode::SchemaViolation, path + "/apex_kind: expected \"stationary\" or \"chord_fallback\"");
    }

    CurvatureResult r {
        .angle_deg = num("angle_deg"),
        .apex_y = num("apex_y"),
        .y_upper = num("y_upper"),
        .y_lower = num("y_lower"),
        .slope_upper = num("slope_upper"),
        .slope_lower = num("slope_lower"),
        .curve = std::move(curve),
        .candidates = {},
        .apex_kind = kind_j == "stationary" ? ApexKind::stationary : ApexKind::chord_fallback,
    };
    const auto& cand_j = require_field(img, "candidates", path);
    if (!cand_j.is_array()) {
        throw Error(ErrorCode::SchemaViolation, path + "/candidates: expected an array");
    }
    for (std::size_t k = 0; k < cand_j.size(); ++k) {
        const std::string kpath = path + "/candidates/" + std::to_string(k);
        if (!cand_j[k].is_array() || cand_j[k].size() != 2) {
            throw Error(ErrorCode::SchemaViolation, kpath + ": expected [apex_y, angle_deg]");
        }
        r.candidates.push_back({ require_number(cand_j[k][0], kpath + "/0"), require_number(cand_j[k][1], kpath + "/1") });
    }
    return r;
}

} // namespace detail

inline void write_results_file(std::span<const BatchEntry> entries, std::ostream& out)
{
    std::set<std::string> seen;
    out << "{\"images\":[";
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        if (!seen.insert(e.id).second) {
            throw Error(ErrorCode::InvalidArgument, "duplicate result id '" + e.id + "'");
        }
        out << (i ? ",\n" : "\n");
        if (e.ok()) {
            detail::write_result_object(out, e.id, e.result());
        } else {
            out << "{\"id\":" << detail::json_string(e.id) << ",\"error\":\"" << to_string(e.error().code()) << "\"}";
        }
    }
    out << (entries.empty() ? "]}\n" : "\n]}\n");
    if (!out) {
        throw Error(ErrorCode::IoFailure, "failed writing results");
    }
}

inline std::vector<ResultEntry> parse_results_file(std::istream& in)
{
    const auto doc = detail::parse_json_text(in);
    const auto& images = detail::images_array(doc);
    std::vector<ResultEntry> out;
    std::set<std::string> seen;
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::string path = "/images/" + std::to_string(i);
        ResultEntry entry;
        entry.id = detail::parse_image_id(images[i], path, seen);
        if (const auto it = images[i].find("error"); it != images[i].end()) {
            if (!it->is_string()) {
                throw Error(ErrorCode::SchemaViolation, path + "/error: expected a string");
            }
            entry.error = it->get<std::string>();
        } else {
            entry.result = detail::parse_result_object(images[i], path);
        }
        out.push_back(std::move(entry));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr std::string_view kAnglesHeader = "id,angle_auto,angle_manual,angle_cobb";
inline constexpr std::string_view kTruthHeader = "id,angle_true";

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line)
{
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return cells;
}

/// Reads lines, dropping a trailing '\r' and skipping empty lines after the
/// header. Returns (line number, text) pairs, header first.
inline std::vector<std::pair<std::size_t, std::string>> read_csv_lines(std::istream& in)
{
    std::vector<std::pair<std::size_t, std::string>> lines;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() && number > 1) {
            continue;
        }
        lines.emplace_back(number, line);
    }
    return lines;
}

inline std::optional<double> parse_angle_cell(const std::string& cell, const std::string& id, std::size_t line)
{
    if (cell.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) {
        throw Error(ErrorCode::NonNumericAngle, "line " + std::to_string(line) + ": '" + cell + "' is not a number");
    }
    if (!angle_in_range(v)) {
        throw Error(ErrorCode::InvariantViolation, "image '" + id + "' (line " + std::to_string(line) + "): angle must be in [0,180)");
    }
    return v;
}

inline std::vector<std::vector<std::string>> read_csv_table(std::istream& in, std::string_view header)
{
    const auto lines = read_csv_lines(in);
    if (lines.empty() || lines.front().second != header) {
        throw Error(ErrorCode::MalformedCsv, "line 1: expected header '" + std::string(header) + "'");
    }
    const auto columns = split_csv_line(header).size();
    std::vector<std::vector<std::string>> rows;
    std::set<std::string> seen;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split_csv_line(lines[i].second);
        const auto where = "line " + std::to_string(lines[i].first);
        if (cells.size() != columns) {
            throw Error(ErrorCode::MalformedCsv, where + ": expected " + std::to_string(columns) + " fields");
        }
        if (cells[0].empty()) {
            throw Error(ErrorCode::MalformedCsv, where + ": empty id");
        }
        if (!seen.insert(cells[0]).second) {
            throw Error(ErrorCode::MalformedCsv, where + ": duplicate id '" + cells[0] + "'");
        }
        cells.push_back(std::to_string(lines[i].first));
        rows.push_back(std::move(cells));
    }
    return rows;
}

inline void require_csv_safe_id(const std::string& id)
{
    if (id.empty() || id.find_first_of(",\r\n") != std::string::npos) {
        throw Error(ErrorCode::InvalidArgument, "id '" + id + "' cannot be written to CSV");
    }
}

inline std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

} // namespace detail

inline std::vector<AngleRecord> parse_angles_csv(std::istream& in)
{
    std::vector<AngleRecord> out;
    for (const auto& row : detail::read_csv_table(in, kAnglesHeader)) {
        const auto line = static_cast<std::size_t>(std::stoull(row.back()));
        out.push_back({ row[0], detail::parse_angle_cell(row[1], row[0], line), detail::parse_angle_cell(row[2], row[0], line),
            detail::parse_angle_cell(row[3], row[0], line) });
    }
    return out;
}

inline void write_angles_csv(std::span<const AngleRecord> records, std::ostream& out)
{
    out << kAnglesHeader << '\n';
    for (const auto& r : records) {
        detail::require_csv_safe_id(r.id);
        out << r.id << ',' << detail::optional_cell(r.angle_auto) << ',' << detail::optional_cell(r.angle_manual) << ','
            << detail::optional_cell(r.angle_cobb) << '\n';
    }
}

struct TruthRecord {
    std::string id;
    double angle_true = 0.0;

    friend bool operator==(const TruthRecord&, const TruthRecord&) = default;
};

inline std::vector<TruthRecord> parse_truth_csv(std::istream& in)
{
    std::vector<TruthRecord> out;
    for (const auto& row : detail::read_csv_table(in, kTruthHeader)) {
        const auto line = static_cast<std::size_t>(std::stoull(row.back()));
        const auto v = detail::parse_angle_cell(row[1], row[0], line);
        if (!v) {
            throw Error(ErrorCode::MalformedCsv, "line " + std::to_string(line) + ": missing angle_true");
        }
        out.push_back({ row[0], *v });
    }
    return out;
}

inline void write_truth_csv(std::span<const TruthRecord> records, std::ostream& out)
{
    out << kTruthHeader << '\n';
    for (const auto& r : records) {
        detail::require_csv_safe_id(r.id);
        out << r.id << ',' << format_double(r.angle_true) << '\n';
    }
}

} // namespace spinecurve
