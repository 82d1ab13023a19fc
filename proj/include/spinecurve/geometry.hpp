#pragma once

// Polynomial spine model x = f(y): least-squares fitting over a normalized
// ordinate, evaluation, differentiation and stationary-point search.

#include "spinecurve/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace spinecurve {

inline constexpr int kMaxDegree = 5;
inline constexpr int kDefaultDegree = 5;

/// A point on the coronal image. y grows downward (craniocaudal), x is lateral.
struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

/// Polynomial x = sum_k coeffs[k] * t^k with t = (y - y_offset) / y_scale,
/// valid over the pixel domain [y_lo, y_hi].
class SpineCurve {
public:
    SpineCurve(std::vector<double> coeffs, double y_offset, double y_scale, double y_lo, double y_hi)
        : coeffs_(std::move(coeffs))
        , y_offset_(y_offset)
        , y_scale_(y_scale)
        , y_lo_(y_lo)
        , y_hi_(y_hi)
    {
        const auto n = coeffs_.size();
        if (n < 2 || n > kMaxDegree + 1) {
            throw Error(ErrorCode::InvalidArgument, "curve degree must be in [1,5], got " + std::to_string(static_cast<int>(n) - 1));
        }
        const bool finite = std::all_of(coeffs_.begin(), coeffs_.end(), [](double c) { return std::isfinite(c); })
            && std::isfinite(y_offset_) && std::isfinite(y_scale_) && std::isfinite(y_lo_) && std::isfinite(y_hi_);
        if (!finite) {
            throw Error(ErrorCode::NonFiniteInput, "curve parameters must be finite");
        }
        if (!(y_scale_ > 0.0)) {
            throw Error(ErrorCode::InvalidArgument, "y_scale must be positive");
        }
        if (!(y_lo_ < y_hi_)) {
            throw Error(ErrorCode::InvalidArgument, "curve domain must satisfy y_lo < y_hi");
        }
    }

    int degree() const noexcept { return static_cast<int>(coeffs_.size()) - 1; }
    const std::vector<double>& coeffs() const noexcept { return coeffs_; }
    double y_offset() const noexcept { return y_offset_; }
    double y_scale() const noexcept { return y_scale_; }
    double y_lo() const noexcept { return y_lo_; }
    double y_hi() const noexcept { return y_hi_; }
    double span() const noexcept { return y_hi_ - y_lo_; }

    double normalized(double y) const noexcept { return (y - y_offset_) / y_scale_; }

    friend bool operator==(const SpineCurve&, const SpineCurve&) = default;

private:
    std::vector<double> coeffs_;
    double y_offset_;
    double y_scale_;
    double y_lo_;
    double y_hi_;
};

inline double eval_curve(const SpineCurve& curve, double y) noexcept
{
    const double t = curve.normalized(y);
    const auto& c = curve.coeffs();
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
        acc = acc * t + *it;
    }
    return acc;
}

/// dx/dy, i.e. the t-derivative scaled by 1/y_scale.
inline double eval_deriv(const SpineCurve& curve, double y) noexcept
{
    const double t = curve.normalized(y);
    const auto& c = curve.coeffs();
    double acc = 0.0;
    for (std::size_t k = c.size() - 1; k >= 1; --k) {
        acc = acc * t + static_cast<double>(k) * c[k];
    }
    return acc / curve.y_scale();
}

/// Least-squares fit of x = f(y) with the given degree. The ordinate is mapped
/// onto [-1, 1] over the data range and the Vandermonde system is solved by
/// Householder QR.
inline SpineCurve fit_polynomial(std::span<const Point2> points, int degree = kDefaultDegree)
{
    if (degree < 1 || degree > kMaxDegree) {
        throw Error(ErrorCode::InvalidArgument, "degree must be in [1,5], got " + std::to_string(degree));
    }
    for (const auto& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error(ErrorCode::NonFiniteInput, "fit input contains a non-finite coordinate");
        }
    }
    const auto n = points.size();
    if (n < static_cast<std::size_t>(degree) + 2) {
        throw Error(ErrorCode::TooFewPoints,
            std::to_string(n) + " points, need at least " + std::to_string(degree + 2) + " for degree " + std::to_string(degree));
    }

    std::vector<double> ys;
    ys.reserve(n);
    for (const auto& p : points) {
        ys.push_back(p.y);
    }
    std::sort(ys.begin(), ys.end());
    const auto distinct = static_cast<std::size_t>(std::distance(ys.begin(), std::unique(ys.begin(), ys.end())));
    if (distinct < static_cast<std::size_t>(degree) + 1) {
        throw Error(ErrorCode::DegenerateAbscissae,
            std::to_string(distinct) + " distinct y values, need at least " + std::to_string(degree + 1));
    }

    const double y_lo = ys.front();
    const double y_hi = ys[distinct - 1];
    const double y_offset = 0.5 * (y_lo + y_hi);
    const double y_scale = 0.5 * (y_hi - y_lo);

    Eigen::MatrixXd design(static_cast<Eigen::Index>(n), degree + 1);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double t = (points[i].y - y_offset) / y_scale;
        double power = 1.0;
        for (int k = 0; k <= degree; ++k) {
            design(row, k) = power;
            power *= t;
        }
        rhs(row) = points[i].x;
    }
    const Eigen::VectorXd solution = design.householderQr().solve(rhs);

    std::vector<double> coeffs(solution.data(), solution.data() + solution.size());
    return SpineCurve(std::move(coeffs), y_offset, y_scale, y_lo, y_hi);
}

namespace detail {

inline constexpr int kSearchGrid = 1024;

inline double grid_point(double lo, double hi, int k, int count) noexcept
{
    if (k == count - 1) {
        return hi;
    }
    return lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
}

/// Bisection on a bracketing interval [a, b] where g(a) and g(b) have
/// opposite signs. Stops once the bracket is no wider than `tol`.
template <class Fn>
double bisect(Fn&& g, double a, double b, double ga, double tol)
{
    while (b - a > tol) {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b) {
            break;
        }
        const double gm = g(mid);
        if (gm == 0.0) {
            return mid;
        }
        if ((gm < 0.0) == (ga < 0.0)) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    return 0.5 * (a + b);
}

} // namespace detail

/// Roots of f' strictly inside the domain, ascending. Sign changes on a
/// 1024-point grid are refined by bisection to 1e-9 of the domain width;
/// roots closer than 1e-6 of the width are merged.
inline std::vector<double> find_stationary_points(const SpineCurve& curve)
{
    const double lo = curve.y_lo();
    const double hi = curve.y_hi();
    const double width = hi - lo;
    const double tol = 1e-9 * width;
    const double merge = 1e-6 * width;
    auto slope = [&curve](double y) { return eval_deriv(curve, y); };

    constexpr int n = detail::kSearchGrid;
    std::vector<double> roots;
    double y_prev = lo;
    double g_prev = slope(lo);
    for (int k = 1; k < n; ++k) {
        const double y = detail::grid_point(lo, hi, k, n);
        const double g = slope(y);
        if (g == 0.0) {
            if (k < n - 1) {
                roots.push_back(y);
            }
        } else if (g_prev != 0.0 && ((g < 0.0) != (g_prev < 0.0))) {
            roots.push_back(detail::bisect(slope, y_prev, y, g_prev, tol));
        }
        y_prev = y;
        g_prev = g;
    }

    std::vector<double> merged;
    for (double r : roots) {
        if (!(r > lo && r < hi)) {
            continue;
        }
        if (!merged.empty() && r - merged.back() <= merge) {
            continue;
        }
        merged.push_back(r);
    }
    return merged;
}

/// Point of maximal perpendicular distance from the chord joining the curve's
/// domain endpoints. Returns the domain midpoint when the curve is straight.
inline double max_chord_deviation_point(const SpineCurve& curve)
{
    const double lo = curve.y_lo();
    const double hi = curve.y_hi();
    const double x_lo = eval_curve(curve, lo);
    const double x_hi = eval_curve(curve, hi);
    const double chord_slope = (x_hi - x_lo) / (hi - lo);
    // Perpendicular distance is |f(y) - chord(y)| times a constant factor.
    auto deviation = [&](double y) { return std::abs(eval_curve(curve, y) - (x_lo + chord_slope * (y - lo))); };

    constexpr int n = detail::kSearchGrid;
    int best = 0;
    double best_dev = deviation(lo);
    double scale = std::max(std::abs(x_lo), std::abs(x_hi));
    for (int k = 1; k < n; ++k) {
        const double y = detail::grid_point(lo, hi, k, n);
        const double d = deviation(y);
        scale = std::max(scale, std::abs(eval_curve(curve, y)));
        if (d > best_dev) {
            best_dev = d;
            best = k;
        }
    }
    if (best_dev <= 1e-9 * std::max(1.0, scale)) {
        return 0.5 * (lo + hi);
    }

    // The maximizer is where f' equals the chord slope; refine inside the
    // neighbouring grid cells when that difference brackets a sign change.
    auto excess = [&](double y) { return eval_deriv(curve, y) - chord_slope; };
    const double a = detail::grid_point(lo, hi, std::max(best - 1, 0), n);
    const double b = detail::grid_point(lo, hi, std::min(best + 1, n - 1), n);
    const double ga = excess(a);
    const double gb = excess(b);
    double refined = detail::grid_point(lo, hi, best, n);
    if (ga != 0.0 && gb != 0.0 && ((ga < 0.0) != (gb < 0.0))) {
        const double candidate = detail::bisect(excess, a, b, ga, 1e-12 * (hi - lo));
        if (deviation(candidate) >= best_dev) {
            refined = candidate;
        }
    }
    return refined;
}

} // namespace spinecurve
