#pragma once

// Synthetic spine phantoms with exactly known curves, angles and detection
// provenance.
//
// Random stream: std::mt19937_64 (bit-exact by the C++ standard). Uniform
// doubles take the top 53 bits, (x >> 11) * 2^-53. Normals use the
// Box-Muller cosine branch on two fresh uniforms, one normal per call.
// Per-image seeds are derived with the SplitMix64 finalizer from
// (suite seed, image index). Distributions from <random> are avoided since
// their output is implementation-defined.

#include "spinecurve/curvature.hpp"
#include "spinecurve/detection_io.hpp"
#include "spinecurve/error.hpp"
#include "spinecurve/geometry.hpp"
#include "spinecurve/metrics.hpp"
#include "spinecurve/records.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <ostream>
#include <random>
#include <string>
#include <vector>

namespace spinecurve {

inline constexpr double kMinTargetAngle = 10.0;
inline constexpr double kMaxTargetAngle = 45.0;
inline constexpr int kMinLaminae = 14;
inline constexpr int kMaxLaminae = 17;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) noexcept
{
    return splitmix64(splitmix64(seed) ^ index);
}

class PhantomRng {
public:
    explicit PhantomRng(std::uint64_t seed)
        : engine_(seed)
    {
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal()
    {
        const double u1 = 1.0 - uniform(); // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

struct PhantomConfig {
    int n_laminae = 16;
    double image_width = 800.0;
    double image_height = 1600.0;
    double target_angle = 25.0;
    double noise_px = 2.0;
    int fp_count = 2;
    double fp_offset_px = 10.0;
    double dropout_rate = 0.1;
    double box_w = 120.0;
    double box_h = 40.0;
    std::uint64_t seed = 0;
};

struct PhantomTruth {
    SpineCurve true_curve;
    double true_angle_deg = 0.0;
    std::vector<Point2> true_centers;
    std::vector<std::size_t> injected_fp_indices; // into ImageRecord::detections
    std::vector<std::size_t> dropped_indices;     // into true_centers
};

struct Phantom {
    ImageRecord record;
    PhantomTruth truth;
};

/// Vertical extent covered by laminae: a margin of 2.5 box heights at each end.
inline std::pair<double, double> phantom_domain(const PhantomConfig& cfg) noexcept
{
    const double margin = 2.5 * cfg.box_h;
    return { margin, cfg.image_height - margin };
}

inline void validate(const PhantomConfig& cfg)
{
    auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
    if (cfg.n_laminae < kMinLaminae || cfg.n_laminae > kMaxLaminae) {
        fail("n_laminae must be in [14,17]");
    }
    if (!(cfg.target_angle >= kMinTargetAngle && cfg.target_angle <= kMaxTargetAngle)) {
        fail("target_angle must be in [10,45] degrees");
    }
    if (!(std::isfinite(cfg.noise_px) && cfg.noise_px >= 0.0)) {
        fail("noise_px must be finite and non-negative");
    }
    if (cfg.fp_count < 0) {
        fail("fp_count must be non-negative");
    }
    if (!(std::isfinite(cfg.fp_offset_px) && cfg.fp_offset_px >= 0.0)) {
        fail("fp_offset_px must be finite and non-negative");
    }
    if (!(cfg.dropout_rate >= 0.0 && cfg.dropout_rate < 1.0)) {
        fail("dropout_rate must be in [0,1)");
    }
    if (!(cfg.box_w > 0.0 && cfg.box_h > 0.0 && std::isfinite(cfg.box_w) && std::isfinite(cfg.box_h))) {
        fail("box size must be positive");
    }
    if (!(std::isfinite(cfg.image_width) && std::isfinite(cfg.image_height) && cfg.image_width > 2.0 * cfg.box_w)) {
        fail("image must be wider than two boxes");
    }
    const auto [lo, hi] = phantom_domain(cfg);
    if (!(hi - lo > static_cast<double>(cfg.n_laminae) * cfg.box_h)) {
        fail("image too short for the requested laminae");
    }
}

namespace detail {

/// Coefficients of p(alpha + beta * t) given coefficients of p(u).
inline std::vector<double> compose_affine(const std::vector<double>& p, double alpha, double beta)
{
    std::vector<double> out(p.size(), 0.0);
    // Horner on polynomials: acc = acc * (alpha + beta t) + p_k
    for (auto it = p.rbegin(); it != p.rend(); ++it) {
        std::vector<double> next(p.size(), 0.0);
        for (std::size_t k = 0; k < out.size(); ++k) {
            next[k] += alpha * out[k];
            if (k + 1 < next.size()) {
                next[k + 1] += beta * out[k];
            }
        }
        next[0] += *it;
        out = std::move(next);
    }
    return out;
}

} // namespace detail

/// Single-arc cubic whose measured curvature equals `target_angle`.
///
/// The shape is x = A * g(u) over u in [0,1] spanning the domain, with
/// g'(u) = (u - u_apex)(u - u_far): one stationary point inside the domain
/// and the other outside it. The measured angle grows monotonically with the
/// amplitude A, which is found by bisection. The curve is centred laterally
/// on `x_center`.
inline SpineCurve gen_true_curve(double target_angle, double y_lo, double y_hi, double x_center, PhantomRng& rng)
{
    if (!(target_angle >= kMinTargetAngle && target_angle <= kMaxTargetAngle)) {
        throw Error(ErrorCode::InvalidArgument, "target angle must be in [10,45] degrees");
    }
    if (!(y_lo < y_hi)) {
        throw Error(ErrorCode::InvalidArgument, "curve domain must satisfy y_lo < y_hi");
    }
    const double u_apex = rng.uniform(0.35, 0.65);
    const bool far_below = rng.uniform() < 0.5;
    const double u_far = far_below ? rng.uniform(1.3, 2.2) : -rng.uniform(0.3, 1.2);
    const double direction = rng.uniform() < 0.5 ? -1.0 : 1.0;

    // g(u) = u^3/3 - (u_a + u_f) u^2 / 2 + u_a u_f u, then u = (1 + t) / 2.
    const std::vector<double> g_u { 0.0, u_apex * u_far, -0.5 * (u_apex + u_far), 1.0 / 3.0 };
    const std::vector<double> g_t = detail::compose_affine(g_u, 0.5, 0.5);

    const double y_offset = 0.5 * (y_lo + y_hi);
    const double y_scale = 0.5 * (y_hi - y_lo);
    auto build = [&](double amplitude, double shift) {
        std::vector<double> c(g_t.size());
        for (std::size_t k = 0; k < c.size(); ++k) {
            c[k] = direction * amplitude * g_t[k];
        }
        c[0] += shift;
        return SpineCurve(std::move(c), y_offset, y_scale, y_lo, y_hi);
    };
    auto angle_at = [&](double amplitude) { return measure_curve(build(amplitude, 0.0)).angle_deg; };

    double lo = 0.0;
    double hi = y_hi - y_lo;
    int expansions = 0;
    while (angle_at(hi) < target_angle) {
        lo = hi;
        hi *= 2.0;
        if (++expansions > 60) {
            throw Error(ErrorCode::UnreachableTarget, "could not bracket the target angle");
        }
    }
    for (int iter = 0; iter < 200 && hi - lo > 1e-12 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        (angle_at(mid) < target_angle ? lo : hi) = mid;
    }
    const double amplitude = 0.5 * (lo + hi);

    const SpineCurve centred = build(amplitude, 0.0);
    double x_min = eval_curve(centred, y_lo);
    double x_max = x_min;
    for (int k = 1; k <= 256; ++k) {
        const double x = eval_curve(centred, y_lo + (y_hi - y_lo) * k / 256.0);
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
    }
    return build(amplitude, x_center - 0.5 * (x_min + x_max));
}

namespace detail {

inline GtBox centred_box(double cx, double cy, const PhantomConfig& cfg)
{
    return { std::clamp(cx - 0.5 * cfg.box_w, 0.0, cfg.image_width), std::clamp(cy - 0.5 * cfg.box_h, 0.0, cfg.image_height),
        std::clamp(cx + 0.5 * cfg.box_w, 0.0, cfg.image_width), std::clamp(cy + 0.5 * cfg.box_h, 0.0, cfg.image_height) };
}

} // namespace detail

/// One phantom image. The draw order is fixed: curve shape, per-lamina
/// jitter/dropout/score, then false positives last, so that changing only
/// fp_count leaves the true boxes unchanged.
inline Phantom gen_phantom(const PhantomConfig& cfg, std::string id = "phantom")
{
    validate(cfg);
    PhantomRng rng(cfg.seed);
    const auto [y_lo, y_hi] = phantom_domain(cfg);

    SpineCurve curve = gen_true_curve(cfg.target_angle, y_lo, y_hi, 0.5 * cfg.image_width, rng);
    const double true_angle = measure_curve(curve).angle_deg;

    Phantom out { .record = {}, .truth = { curve, true_angle, {}, {}, {} } };
    auto& rec = out.record;
    auto& truth = out.truth;
    rec.id = std::move(id);
    rec.width = std::llround(cfg.image_width);
    rec.height = std::llround(cfg.image_height);

    std::vector<GtBox> gts;
    const int n = cfg.n_laminae;
    for (int i = 0; i < n; ++i) {
        const double y = i == n - 1 ? y_hi : y_lo + (y_hi - y_lo) * static_cast<double>(i) / static_cast<double>(n - 1);
        const Point2 c { eval_curve(curve, y), y };
        truth.true_centers.push_back(c);
        gts.push_back(detail::centred_box(c.x, c.y, cfg));

        const double jx = cfg.noise_px * rng.normal();
        const double jy = cfg.noise_px * rng.normal();
        const bool dropped = rng.uniform() < cfg.dropout_rate;
        const double score = rng.uniform(0.7, 1.0);
        if (dropped) {
            truth.dropped_indices.push_back(static_cast<std::size_t>(i));
            continue;
        }
        const auto b = detail::centred_box(c.x + jx, c.y + jy, cfg);
        rec.detections.push_back({ b.x_min, b.y_min, b.x_max, b.y_max, score });
    }

    // False positives sit near the curve in the middle half of the spine and
    // never overlap a true lamina box at IoU >= 0.5.
    const double quarter = 0.25 * (y_hi - y_lo);
    for (int k = 0; k < cfg.fp_count; ++k) {
        bool placed = false;
        for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
            const double y = rng.uniform(y_lo + quarter, y_hi - quarter);
            const double offset = rng.uniform(-cfg.fp_offset_px, cfg.fp_offset_px);
            const double score = rng.uniform(0.6, 1.0);
            const auto b = detail::centred_box(eval_curve(curve, y) + offset, y, cfg);
            const bool overlaps = std::any_of(gts.begin(), gts.end(), [&](const GtBox& g) { return iou(b, g) >= kDefaultIouThreshold; });
            if (overlaps) {
                continue;
            }
            truth.injected_fp_indices.push_back(rec.detections.size());
            rec.detections.push_back({ b.x_min, b.y_min, b.x_max, b.y_max, score });
            placed = true;
        }
        if (!placed) {
            throw Error(ErrorCode::InvalidConfig, "could not place a false positive away from the true laminae");
        }
    }
    rec.ground_truth = std::move(gts);
    return out;
}

struct SuiteOptions {
    int n_images = 30;
    std::uint64_t seed = 42;
    double angle_lo = kMinTargetAngle;
    double angle_hi = kMaxTargetAngle;
    bool vary_laminae = true; // draw n_laminae uniformly from [14,17] per image
};

struct PhantomSuite {
    std::vector<Phantom> phantoms;

    std::vector<ImageRecord> detection_records() const
    {
        std::vector<ImageRecord> out;
        for (const auto& p : phantoms) {
            auto rec = p.record;
            rec.ground_truth.reset();
            out.push_back(std::move(rec));
        }
        return out;
    }

    std::vector<ImageRecord> annotation_records() const
    {
        std::vector<ImageRecord> out;
        for (const auto& p : phantoms) {
            out.push_back({ .id = p.record.id, .detections = {}, .ground_truth = p.record.ground_truth,
                .width = p.record.width, .height = p.record.height });
        }
        return out;
    }

    std::vector<TruthRecord> truth_records() const
    {
        std::vector<TruthRecord> out;
        for (const auto& p : phantoms) {
            out.push_back({ p.record.id, p.truth.true_angle_deg });
        }
        return out;
    }
};

inline std::string phantom_id(int index)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "phantom_%03d", index);
    return buf;
}

/// `n_images` phantoms from a template config. Image i draws its target
/// angle, lamina count and phantom seed from the stream seeded by
/// derive_seed(suite seed, i); the template's seed and target are ignored.
inline PhantomSuite gen_suite(const PhantomConfig& tmpl, const SuiteOptions& opts)
{
    if (opts.n_images < 1) {
        throw Error(ErrorCode::InvalidConfig, "suite needs at least one image");
    }
    if (!(opts.angle_lo >= kMinTargetAngle && opts.angle_hi <= kMaxTargetAngle && opts.angle_lo <= opts.angle_hi)) {
        throw Error(ErrorCode::InvalidConfig, "suite angle range must lie within [10,45]");
    }
    PhantomSuite suite;
    for (int i = 0; i < opts.n_images; ++i) {
        PhantomRng stream(derive_seed(opts.seed, static_cast<std::uint64_t>(i)));
        PhantomConfig cfg = tmpl;
        cfg.target_angle = stream.uniform(opts.angle_lo, opts.angle_hi);
        const int n_lam = kMinLaminae + static_cast<int>(stream.uniform() * (kMaxLaminae - kMinLaminae + 1));
        if (opts.vary_laminae) {
            cfg.n_laminae = n_lam;
        }
        cfg.seed = stream.next_u64();
        suite.phantoms.push_back(gen_phantom(cfg, phantom_id(i)));
    }
    return suite;
}

inline void write_suite(const PhantomSuite& suite, std::ostream& detections, std::ostream& annotations, std::ostream& truth)
{
    const auto dets = suite.detection_records();
    const auto anns = suite.annotation_records();
    const auto tr = suite.truth_records();
    write_detection_file(dets, detections);
    write_detection_file(anns, annotations);
    write_truth_csv(tr, truth);
}

} // namespace spinecurve
