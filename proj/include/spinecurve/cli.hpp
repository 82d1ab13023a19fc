#pragma once

// Subcommand implementations behind the `spinecurve` executable. Each returns
// the process exit code and writes human-readable output to the given streams.

#include "spinecurve/curvature.hpp"
#include "spinecurve/detection_io.hpp"
#include "spinecurve/error.hpp"
#include "spinecurve/metrics.hpp"
#include "spinecurve/svg.hpp"
#include "spinecurve/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace spinecurve::cli {

namespace fs = std::filesystem;

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitPartial = 2;

/// Writes to a sibling temp file and renames it over `path`.
inline void write_file_atomic(const fs::path& path, const std::string& content)
{
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
        }
        out << content;
        out.flush();
        if (!out) {
            throw Error(ErrorCode::IoFailure, "failed writing " + tmp.string());
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoFailure, "cannot rename into " + path.string());
    }
}

inline std::ifstream open_input(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoFailure, "cannot read " + path.string());
    }
    return in;
}

inline std::vector<ImageRecord> load_detections(const fs::path& path)
{
    auto in = open_input(path);
    return parse_detection_file(in);
}

/// File name for an image id; anything outside [A-Za-z0-9._-] becomes '_'.
inline std::string svg_file_name(const std::string& id)
{
    std::string name;
    for (char c : id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        name += ok ? c : '_';
    }
    return name + ".svg";
}

inline void ensure_directory(const fs::path& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw Error(ErrorCode::IoFailure, "cannot create directory " + dir.string());
    }
}

struct MeasureOptions {
    fs::path detections;
    fs::path out;
    double min_score = kDefaultMinScore;
    int degree = kDefaultDegree;
    std::optional<fs::path> svg_dir = std::nullopt;
};

inline int cmd_measure(const MeasureOptions& opt, std::ostream& out, std::ostream& err)
{
    try {
        if (!(opt.min_score >= 0.0 && opt.min_score <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "--min-score must be in [0,1]");
        }
        if (opt.degree < 1 || opt.degree > kMaxDegree) {
            throw Error(ErrorCode::InvalidArgument, "--degree must be in [1,5]");
        }
        const auto records = load_detections(opt.detections);
        const auto batch = measure_batch(records, opt.min_score, opt.degree);

        std::ostringstream text;
        write_results_file(batch, text);
        write_file_atomic(opt.out, text.str());

        if (opt.svg_dir) {
            ensure_directory(*opt.svg_dir);
            for (std::size_t i = 0; i < batch.size(); ++i) {
                const auto result = batch[i].ok() ? std::optional(batch[i].result()) : std::nullopt;
                const auto note = batch[i].ok() ? std::string() : std::string("measurement failed: ") + batch[i].error().what();
                write_file_atomic(*opt.svg_dir / svg_file_name(records[i].id), render_overlay(records[i], result, note));
            }
        }

        std::size_t failed = 0;
        for (const auto& e : batch) {
            if (!e.ok()) {
                ++failed;
                err << "image '" << e.id << "': " << e.error().what() << '\n';
            }
        }
        out << "measured " << batch.size() - failed << " of " << batch.size() << " images\n";
        return failed ? kExitPartial : kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

struct EvalDetOptions {
    fs::path detections;
    fs::path annotations;
    double iou_threshold = kDefaultIouThreshold;
};

/// Pools greedy matches over every image and prints AP. Annotated images with
/// no detection record count their ground truth as missed.
inline int cmd_eval_det(const EvalDetOptions& opt, std::ostream& out, std::ostream& err)
{
    try {
        if (!(opt.iou_threshold > 0.0 && opt.iou_threshold <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "--iou must be in (0,1]");
        }
        const auto dets = load_detections(opt.detections);
        const auto anns = load_detections(opt.annotations);
        std::map<std::string, const ImageRecord*> by_id;
        for (const auto& a : anns) {
            by_id[a.id] = &a;
        }

        std::vector<std::string> missing;
        for (const auto& d : dets) {
            const auto it = by_id.find(d.id);
            if (it == by_id.end() || !it->second->ground_truth) {
                missing.push_back(d.id);
            }
        }
        if (!missing.empty()) {
            err << "error: MissingAnnotations: no ground truth for " << missing.size() << " image(s):";
            for (const auto& id : missing) {
                err << ' ' << id;
            }
            err << '\n';
            return kExitFailure;
        }

        MatchOutcome pooled;
        std::set<std::string> seen;
        for (const auto& d : dets) {
            pooled.append(match_detections(d.detections, *by_id.at(d.id)->ground_truth, opt.iou_threshold));
            seen.insert(d.id);
        }
        for (const auto& a : anns) {
            if (!seen.count(a.id) && a.ground_truth) {
                pooled.total_gt += a.ground_truth->size();
            }
        }
        const double ap = average_precision(pooled);
        out << "AP@" << format_double(opt.iou_threshold) << " = " << format_fixed(ap, 4) << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

struct EvalAngleOptions {
    fs::path results;
    fs::path reference;
    std::string column; // manual | cobb | true
};

inline int cmd_eval_angle(const EvalAngleOptions& opt, std::ostream& out, std::ostream& err)
{
    try {
        std::vector<ResultEntry> results;
        {
            auto in = open_input(opt.results);
            results = parse_results_file(in);
        }

        auto in = open_input(opt.reference);
        std::string first_line;
        std::getline(in, first_line);
        if (!first_line.empty() && first_line.back() == '\r') {
            first_line.pop_back();
        }
        in.clear();
        in.seekg(0);

        std::map<std::string, std::optional<double>> reference;
        if (opt.column == "true") {
            if (first_line != kTruthHeader) {
                throw Error(ErrorCode::InvalidArgument, "--column true needs a truth CSV with header '" + std::string(kTruthHeader) + "'");
            }
            for (const auto& r : parse_truth_csv(in)) {
                reference[r.id] = r.angle_true;
            }
        } else if (opt.column == "manual" || opt.column == "cobb") {
            if (first_line != kAnglesHeader) {
                throw Error(ErrorCode::InvalidArgument,
                    "--column " + opt.column + " needs an angle CSV with header '" + std::string(kAnglesHeader) + "'");
            }
            for (const auto& r : parse_angles_csv(in)) {
                reference[r.id] = opt.column == "manual" ? r.angle_manual : r.angle_cobb;
            }
        } else {
            throw Error(ErrorCode::InvalidArgument, "--column must be manual, cobb or true");
        }

        std::vector<double> pred;
        std::vector<double> ref;
        std::size_t excluded = 0;
        std::set<std::string> result_ids;
        for (const auto& r : results) {
            result_ids.insert(r.id);
            const auto it = reference.find(r.id);
            if (r.result && it != reference.end() && it->second) {
                pred.push_back(r.result->angle_deg);
                ref.push_back(*it->second);
            } else {
                ++excluded;
            }
        }
        for (const auto& [id, value] : reference) {
            if (!result_ids.count(id)) {
                ++excluded;
            }
        }
        if (pred.size() < 2) {
            err << "error: insufficient overlap: " << pred.size() << " paired angle(s), need at least 2\n";
            return kExitFailure;
        }
        const auto stats = agreement(pred, ref);
        out << "MAD = " << format_fixed(stats.mad, 4) << "°, SD = " << format_fixed(stats.sd, 4)
            << "°, R = " << format_fixed(stats.r, 4) << ", n = " << stats.n << '\n';
        out << "excluded = " << excluded << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

struct SynthOptions {
    int n = 30;
    std::uint64_t seed = 42;
    double noise_px = 2.0;
    int fp_count = 2;
    double dropout = 0.1;
    fs::path out_dir;
};

inline int cmd_synth(const SynthOptions& opt, std::ostream& out, std::ostream& err)
{
    try {
        PhantomConfig tmpl;
        tmpl.noise_px = opt.noise_px;
        tmpl.fp_count = opt.fp_count;
        tmpl.dropout_rate = opt.dropout;
        validate(tmpl);
        SuiteOptions suite_opts;
        suite_opts.n_images = opt.n;
        suite_opts.seed = opt.seed;
        const auto suite = gen_suite(tmpl, suite_opts);

        std::ostringstream dets;
        std::ostringstream anns;
        std::ostringstream truth;
        write_suite(suite, dets, anns, truth);
        ensure_directory(opt.out_dir);
        write_file_atomic(opt.out_dir / "detections.json", dets.str());
        write_file_atomic(opt.out_dir / "annotations.json", anns.str());
        write_file_atomic(opt.out_dir / "truth.csv", truth.str());
        out << "wrote " << suite.phantoms.size() << " phantoms to " << opt.out_dir.string() << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

struct RenderOptions {
    fs::path detections;
    fs::path results;
    fs::path out_dir;
};

inline int cmd_render(const RenderOptions& opt, std::ostream& out, std::ostream& err)
{
    try {
        const auto records = load_detections(opt.detections);
        std::vector<ResultEntry> results;
        {
            auto in = open_input(opt.results);
            results = parse_results_file(in);
        }
        std::map<std::string, const ResultEntry*> by_id;
        for (const auto& r : results) {
            by_id[r.id] = &r;
        }
        ensure_directory(opt.out_dir);
        for (const auto& rec : records) {
            const auto it = by_id.find(rec.id);
            std::optional<CurvatureResult> result;
            std::string note;
            if (it == by_id.end()) {
                note = "no result for this image";
            } else if (it->second->result) {
                result = it->second->result;
            } else {
                note = "measurement failed: " + it->second->error;
            }
            write_file_atomic(opt.out_dir / svg_file_name(rec.id), render_overlay(rec, result, note));
        }
        out << "rendered " << records.size() << " overlays to " << opt.out_dir.string() << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace spinecurve::cli
