#pragma once

// Shared systems and sphere measurements for the test suites and the acceptance run.

#include <pswitch/barabanov.hpp>

#include "oracles.hpp"

#include <algorithm>
#include <random>
#include <vector>

namespace fixture {

using namespace pswitch;

// Singular matrix with kernel along `kernel` that pulls the direction `image` back: A k = 0, A y = -y.
inline Mat2 facet_matrix(const Vec2& kernel, const Vec2& image) {
    const Mat2 basis{kernel.x1, image.x1, kernel.x2, image.x2};
    const double d = basis.a11 * basis.a22 - basis.a12 * basis.a21;
    const Mat2 inv{basis.a22 / d, -basis.a12 / d, -basis.a21 / d, basis.a11 / d};
    return oracle::mul(oracle::mul(basis, Mat2{0.0, 0.0, 0.0, -1.0}), inv);
}

// Both facets of the square replaced by reverse pencils whose kernels hit (1, +-1/2) and (+-1/2, 1).
inline std::vector<Mat2> two_pencil_square() {
    return {facet_matrix({1.0, 0.5}, {0.0, 1.0}), facet_matrix({1.0, -0.5}, {0.0, 1.0}),
            facet_matrix({0.5, 1.0}, {1.0, 0.0}), facet_matrix({-0.5, 1.0}, {1.0, 0.0})};
}

inline std::vector<Mat2> spinning_pair(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 0.3);
    std::vector<Mat2> out;
    for (int i = 0; i < 2; ++i) out.push_back(Mat2{n(rng), n(rng) - 1.0, n(rng) + 1.0, n(rng)});
    return out;
}

// Largest relative radial gap between two spheres normalised to radius 1 at angle 0.
inline double radial_gap(const SphereModel& a, const SphereModel& b, int n = 720) {
    const double ra = a.radius(0.0), rb = b.radius(0.0);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        const double gam = k * two_pi / n;
        worst = std::max(worst, std::abs(a.radius(gam) / ra - b.radius(gam) / rb));
    }
    return worst;
}

// Share of grid points where centred differences of ln r agree with the cotangent of
// the angle between x and one admissible velocity: a leading image or a pencil image.
inline double slope_agreement(const ControlSet& set, const SphereModel& sphere, int n = 4096) {
    const double h = pi / n;
    std::vector<Vec2> pencil_images;
    if (set.is_finite_set())
        for (const auto& p : reverse_pencils(set)) pencil_images.push_back(p.image);
    const std::vector<double> corners = sphere.corners();
    const auto near_corner = [&](double gam) {
        return std::any_of(corners.begin(), corners.end(),
                           [&](double c) { return std::abs(std::remainder(gam - c, pi)) <= 2 * h; });
    };
    int good = 0, total = 0;
    for (int k = 0; k < n; ++k) {
        const double gam = sphere.origin() + (k + 0.5) * h;
        const double fd = (sphere.log_radius(gam + 0.5 * h) - sphere.log_radius(gam - 0.5 * h)) / h;
        const double allowed = std::max(1e-4, 10 * h * h);
        if (near_corner(gam)) continue;
        ++total;
        const Vec2 x = unit_at(gam);
        std::vector<double> cands;
        for (Side side : {Side::Left, Side::Right}) {
            const auto d = detail::leading_unchecked(set, x, side);
            if (d.defined) cands.push_back(dot(x, d.image) / cross(x, d.image));
        }
        for (const Vec2& l : pencil_images) cands.push_back(dot(x, l) / cross(x, l));
        if (set.kind() == ControlSet::Kind::Finite && set.centers().size() == 1) {
            const Vec2 ax = set.center() * x;
            cands.push_back(dot(x, ax) / cross(x, ax));
        }
        for (double c : cands)
            if (std::abs(c - fd) <= allowed * std::max(1.0, std::abs(c))) {
                ++good;
                break;
            }
    }
    return total ? static_cast<double>(good) / total : 1.0;
}

inline std::vector<Vec2> regular_polygon(int sides, double phase = 0.0) {
    std::vector<Vec2> v;
    for (int k = 0; k < sides; ++k) v.push_back(unit_at(phase + k * two_pi / sides));
    return v;
}

// Random Hurwitz centers with a rotating part, so that the critical ball is reached
// through an increasing round trajectory as well as through real eigenvalues.
inline Mat2 random_hurwitz(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 0.5);
    for (;;) {
        const Mat2 a = oracle::random_matrix(rng);
        const Mat2 b = a + Mat2{n(rng) - 1.0, n(rng), n(rng), n(rng) - 1.0};
        const auto ev = oracle::quadratic_roots(1.0, -(b.a11 + b.a22), b.a11 * b.a22 - b.a12 * b.a21);
        if (std::max(ev[0].real(), ev[1].real()) < -0.05) return b;
    }
}

}  // namespace fixture
