#pragma once

#include <pswitch/barabanov.hpp>
#include <pswitch/control_set.hpp>
#include <pswitch/errors.hpp>
#include <pswitch/linalg.hpp>
#include <pswitch/log.hpp>
#include <pswitch/stability.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace pswitch {

struct CriticalRadiusOptions {
    bool with_sphere = true;  ///< also build the invariant sphere of the critical ball
    double sphere_tol = 1e-9;
};

struct CriticalRadiusResult {
    double radius = 0.0;
    int iterations = 0;
    double sigma_at_radius = 0.0;
    std::optional<SphereModel> sphere;
};

/// Smallest Frobenius radius around a Hurwitz center whose ball is not stable, by
/// bisection on the radius to within `tol`.
[[nodiscard]] inline CriticalRadiusResult critical_radius(const Mat2& center, double tol,
                                                          const CriticalRadiusOptions& opt = {}) {
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    if (!(spectrum(center).abscissa < 0.0))
        throw Error(ErrorCode::NotHurwitz, "center " + to_string(center) + " is not Hurwitz");
    auto stable = [&](double r) { return decide_stability(ControlSet::frobenius_ball(center, r)).stable; };
    double lo = 0.0;
    double hi = singular_values(center).s1 + frobenius_norm(center);
    for (int k = 0; stable(hi); ++k) {
        if (k == 10) throw Error(ErrorCode::BracketFailure, "ball stays stable up to radius " + std::to_string(hi));
        lo = hi;
        hi *= 2.0;
    }
    CriticalRadiusResult res;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (stable(mid) ? lo : hi) = mid;
        ++res.iterations;
    }
    res.radius = 0.5 * (lo + hi);
    log(LogLevel::Info, "critical radius " + std::to_string(res.radius) + " after " + std::to_string(res.iterations) +
                            " bisection steps");
    if (opt.with_sphere) {
        BarabanovResult b = barabanov_norm(ControlSet::frobenius_ball(center, res.radius), opt.sphere_tol);
        res.sigma_at_radius = b.sigma;
        res.sphere = std::move(b.sphere);
    } else {
        res.sigma_at_radius = lyapunov_exponent(ControlSet::frobenius_ball(center, res.radius), 0.1 * tol).sigma;
    }
    return res;
}

/// Additive uncertainty on each base matrix.
struct NoiseModel {
    enum class Kind { Polytope, Elementwise, Frobenius };
    Kind kind = Kind::Elementwise;
    std::vector<Mat2> vertices;  ///< Polytope: vertices of the perturbation set
    Mat2 bounds{};               ///< Elementwise: |perturbation_ij| <= bounds_ij
    double radius = 0.0;         ///< Frobenius

    [[nodiscard]] static NoiseModel polytope(std::vector<Mat2> vertices) {
        NoiseModel n;
        n.kind = Kind::Polytope;
        n.vertices = std::move(vertices);
        return n;
    }
    [[nodiscard]] static NoiseModel elementwise(const Mat2& bounds) {
        NoiseModel n;
        n.kind = Kind::Elementwise;
        n.bounds = bounds;
        return n;
    }
    [[nodiscard]] static NoiseModel frobenius(double radius) {
        NoiseModel n;
        n.kind = Kind::Frobenius;
        n.radius = radius;
        return n;
    }
};

/// Control set equivalent to the base matrices under noise: vertex sums for
/// polytopic and elementwise noise, a ball or noisy sum for Frobenius noise.
[[nodiscard]] inline ControlSet reduce_noisy(const std::vector<Mat2>& base, const NoiseModel& noise) {
    if (base.empty()) throw Error(ErrorCode::InvalidArgument, "no base matrices");
    if (noise.kind == NoiseModel::Kind::Frobenius) return ControlSet::noisy_ball(base, noise.radius);

    std::vector<Mat2> shifts;
    if (noise.kind == NoiseModel::Kind::Polytope) {
        shifts = noise.vertices;
        if (shifts.empty()) shifts.push_back(Mat2{});
    } else {
        const Mat2& e = noise.bounds;
        if (!(e.a11 >= 0.0 && e.a12 >= 0.0 && e.a21 >= 0.0 && e.a22 >= 0.0))
            throw Error(ErrorCode::InvalidArgument, "elementwise bounds must be nonnegative");
        for (int mask = 0; mask < 16; ++mask) {
            const auto sign = [&](int bit) { return (mask >> bit & 1) ? 1.0 : -1.0; };
            shifts.push_back(Mat2{sign(0) * e.a11, sign(1) * e.a12, sign(2) * e.a21, sign(3) * e.a22});
        }
    }
    std::vector<Mat2> out;
    for (const Mat2& a : base)
        for (const Mat2& d : shifts) {
            const Mat2 v = a + d;
            const bool seen = std::any_of(out.begin(), out.end(), [&](const Mat2& w) { return frobenius_norm(w - v) <= 1e-12; });
            if (!seen) out.push_back(v);
        }
    return ControlSet::finite(out);
}

namespace detail {

inline void validate_symmetric_polygon(const std::vector<Vec2>& v) {
    if (v.size() < 4 || v.size() % 2 != 0)
        throw Error(ErrorCode::InvalidPolygon, "a symmetric polygon needs an even number of at least four vertices");
    const std::size_t n = v.size() / 2;
    double scale = 0.0;
    for (const Vec2& p : v) {
        if (!std::isfinite(p.x1) || !std::isfinite(p.x2)) throw Error(ErrorCode::InvalidPolygon, "non-finite vertex");
        scale = std::max(scale, norm(p));
    }
    if (!(scale > 0.0)) throw Error(ErrorCode::InvalidPolygon, "all vertices are zero");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (norm(v[i]) <= 1e-12 * scale) throw Error(ErrorCode::InvalidPolygon, "zero vertex");
        if (norm(v[i] + v[(i + n) % v.size()]) > 1e-9 * scale)
            throw Error(ErrorCode::InvalidPolygon, "vertex " + std::to_string(i) + " has no opposite partner");
        const Vec2 p = v[i], q = v[(i + 1) % v.size()], r = v[(i + 2) % v.size()];
        if (!(cross(p, q) > 0.0)) throw Error(ErrorCode::InvalidPolygon, "vertices must run counterclockwise");
        if (!(cross(q - p, r - q) > 0.0)) throw Error(ErrorCode::InvalidPolygon, "polygon is not strictly convex");
    }
}

}  // namespace detail

/// One degenerate matrix per pair of opposite facets: it vanishes at the facet
/// midpoint and contracts along the facet, so the polygon is invariant and every
/// point of it has a tangent trajectory.
[[nodiscard]] inline ControlSet polygon_to_system(const std::vector<Vec2>& vertices) {
    detail::validate_symmetric_polygon(vertices);
    const std::size_t n = vertices.size() / 2;
    std::vector<Mat2> out;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 mid = 0.5 * (vertices[i] + vertices[i + 1]);
        const Vec2 dir = vertices[i + 1] - vertices[i];
        if (std::abs(cross(mid, dir)) < 1e-12 * norm(mid) * norm(dir))
            throw Error(ErrorCode::DegenerateFacet, "facet " + std::to_string(i) + " lies on a line through the origin");
        const Mat2 basis{mid.x1, dir.x1, mid.x2, dir.x2};
        out.push_back(basis * Mat2{0.0, 0.0, 0.0, -1.0} * inverse(basis));
    }
    return ControlSet::finite(out);
}

/// Increments on the P intervals of a partition that follow a given curve, for
/// rebuilding that curve with assemble_sphere.
[[nodiscard]] inline std::vector<double> choice_for_polygon(const std::vector<IntervalTag>& partition,
                                                            const SphereModel& curve) {
    std::vector<double> s;
    for (const IntervalTag& t : partition)
        if (t.kind == IntervalTag::Kind::P) s.push_back(curve.log_radius(t.end) - curve.log_radius(t.begin));
    return s;
}

}  // namespace pswitch
