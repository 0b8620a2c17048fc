#pragma once

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace pswitch {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Relative determinant tolerance: |det m| <= eps * |m|_F^2 counts as singular.
inline constexpr double det_tolerance = 1e-10;

struct Vec2 {
    double x1 = 0.0;
    double x2 = 0.0;

    constexpr Vec2& operator+=(const Vec2& o) noexcept {
        x1 += o.x1;
        x2 += o.x2;
        return *this;
    }
    constexpr Vec2& operator-=(const Vec2& o) noexcept {
        x1 -= o.x1;
        x2 -= o.x2;
        return *this;
    }
    constexpr Vec2& operator*=(double s) noexcept {
        x1 *= s;
        x2 *= s;
        return *this;
    }
    friend constexpr Vec2 operator+(Vec2 a, const Vec2& b) noexcept { return a += b; }
    friend constexpr Vec2 operator-(Vec2 a, const Vec2& b) noexcept { return a -= b; }
    friend constexpr Vec2 operator-(const Vec2& a) noexcept { return {-a.x1, -a.x2}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return a *= s; }
    friend constexpr Vec2 operator*(Vec2 a, double s) noexcept { return a *= s; }
    friend constexpr bool operator==(const Vec2&, const Vec2&) = default;
};

/// Dense 2x2 matrix, row-major fields.
struct Mat2 {
    double a11 = 0.0;
    double a12 = 0.0;
    double a21 = 0.0;
    double a22 = 0.0;

    [[nodiscard]] static constexpr Mat2 identity() noexcept { return {1.0, 0.0, 0.0, 1.0}; }

    constexpr Mat2& operator+=(const Mat2& o) noexcept {
        a11 += o.a11;
        a12 += o.a12;
        a21 += o.a21;
        a22 += o.a22;
        return *this;
    }
    constexpr Mat2& operator-=(const Mat2& o) noexcept {
        a11 -= o.a11;
        a12 -= o.a12;
        a21 -= o.a21;
        a22 -= o.a22;
        return *this;
    }
    constexpr Mat2& operator*=(double s) noexcept {
        a11 *= s;
        a12 *= s;
        a21 *= s;
        a22 *= s;
        return *this;
    }
    friend constexpr Mat2 operator+(Mat2 a, const Mat2& b) noexcept { return a += b; }
    friend constexpr Mat2 operator-(Mat2 a, const Mat2& b) noexcept { return a -= b; }
    friend constexpr Mat2 operator-(const Mat2& a) noexcept { return {-a.a11, -a.a12, -a.a21, -a.a22}; }
    friend constexpr Mat2 operator*(double s, Mat2 a) noexcept { return a *= s; }
    friend constexpr Mat2 operator*(Mat2 a, double s) noexcept { return a *= s; }
    friend constexpr Vec2 operator*(const Mat2& m, const Vec2& v) noexcept {
        return {m.a11 * v.x1 + m.a12 * v.x2, m.a21 * v.x1 + m.a22 * v.x2};
    }
    friend constexpr Mat2 operator*(const Mat2& a, const Mat2& b) noexcept {
        return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
                a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
    }
    friend constexpr bool operator==(const Mat2&, const Mat2&) = default;
};

[[nodiscard]] constexpr double dot(const Vec2& a, const Vec2& b) noexcept { return a.x1 * b.x1 + a.x2 * b.x2; }
[[nodiscard]] constexpr double cross(const Vec2& a, const Vec2& b) noexcept { return a.x1 * b.x2 - a.x2 * b.x1; }
[[nodiscard]] inline double norm(const Vec2& v) noexcept { return std::hypot(v.x1, v.x2); }

/// Counterclockwise quarter turn.
[[nodiscard]] constexpr Vec2 perp(const Vec2& v) noexcept { return {-v.x2, v.x1}; }

[[nodiscard]] inline Vec2 normalized(const Vec2& v) {
    const double n = norm(v);
    if (!(n > 0.0)) throw Error(ErrorCode::ZeroVector, "cannot normalize the zero vector");
    return {v.x1 / n, v.x2 / n};
}

[[nodiscard]] inline Vec2 unit_at(double angle) noexcept { return {std::cos(angle), std::sin(angle)}; }

/// Rotates v counterclockwise by angle.
[[nodiscard]] inline Vec2 rotated(const Vec2& v, double angle) noexcept {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x1 - s * v.x2, s * v.x1 + c * v.x2};
}

[[nodiscard]] inline double normalize_angle(double a) noexcept {
    double r = std::fmod(a, two_pi);
    if (r < 0.0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

/// Direction of a line through the origin, folded into [0, pi).
[[nodiscard]] inline double normalize_line_angle(double a) noexcept {
    double r = std::fmod(a, pi);
    if (r < 0.0) r += pi;
    if (r >= pi) r = 0.0;
    return r;
}

/// Polar angle of v in [0, 2pi).
[[nodiscard]] inline double angle_of(const Vec2& v) {
    if (v.x1 == 0.0 && v.x2 == 0.0) throw Error(ErrorCode::ZeroVector, "zero vector has no angle");
    return normalize_angle(std::atan2(v.x2, v.x1));
}

/// Counterclockwise angle from a to b in (-pi, pi]; opposite directions give +pi.
[[nodiscard]] inline double oriented_angle(const Vec2& a, const Vec2& b) {
    if ((a.x1 == 0.0 && a.x2 == 0.0) || (b.x1 == 0.0 && b.x2 == 0.0))
        throw Error(ErrorCode::ZeroVector, "oriented angle needs nonzero vectors");
    const double r = std::atan2(cross(a, b), dot(a, b));
    return r <= -pi ? pi : r;
}

[[nodiscard]] constexpr double det(const Mat2& m) noexcept { return m.a11 * m.a22 - m.a12 * m.a21; }
[[nodiscard]] constexpr double trace(const Mat2& m) noexcept { return m.a11 + m.a22; }
[[nodiscard]] constexpr Mat2 transpose(const Mat2& m) noexcept { return {m.a11, m.a21, m.a12, m.a22}; }
[[nodiscard]] constexpr Mat2 outer(const Vec2& u, const Vec2& v) noexcept {
    return {u.x1 * v.x1, u.x1 * v.x2, u.x2 * v.x1, u.x2 * v.x2};
}
[[nodiscard]] inline double frobenius_norm(const Mat2& m) noexcept {
    return std::sqrt(m.a11 * m.a11 + m.a12 * m.a12 + m.a21 * m.a21 + m.a22 * m.a22);
}
[[nodiscard]] constexpr bool is_metzler(const Mat2& m) noexcept { return m.a12 >= 0.0 && m.a21 >= 0.0; }

/// Matrix with columns c1, c2.
[[nodiscard]] constexpr Mat2 from_columns(const Vec2& c1, const Vec2& c2) noexcept { return {c1.x1, c2.x1, c1.x2, c2.x2}; }

[[nodiscard]] inline Mat2 inverse(const Mat2& m) {
    const double d = det(m);
    if (d == 0.0 || !std::isfinite(1.0 / d)) throw Error(ErrorCode::InvalidArgument, "matrix is singular");
    return {m.a22 / d, -m.a12 / d, -m.a21 / d, m.a11 / d};
}

[[nodiscard]] inline bool is_finite(const Mat2& m) noexcept {
    return std::isfinite(m.a11) && std::isfinite(m.a12) && std::isfinite(m.a21) && std::isfinite(m.a22);
}

[[nodiscard]] inline bool is_degenerate(const Mat2& m, double eps = det_tolerance) noexcept {
    const double f = m.a11 * m.a11 + m.a12 * m.a12 + m.a21 * m.a21 + m.a22 * m.a22;
    return std::abs(det(m)) <= eps * f;
}

/// True when m is a multiple of the identity (relative tolerance).
[[nodiscard]] inline bool is_identity_multiple(const Mat2& m, double eps = 1e-14) noexcept {
    const double scale = std::max(frobenius_norm(m), 1e-300);
    return std::abs(m.a12) <= eps * scale && std::abs(m.a21) <= eps * scale &&
           std::abs(m.a11 - m.a22) <= eps * scale;
}

struct Spectrum2 {
    enum class Kind { Real, Complex };
    Kind kind = Kind::Real;
    double lambda1 = 0.0;  ///< smaller real eigenvalue (Real kind)
    double lambda2 = 0.0;  ///< larger real eigenvalue (Real kind)
    double alpha = 0.0;    ///< real part (Complex kind)
    double beta = 0.0;     ///< positive imaginary part (Complex kind)
    double abscissa = 0.0;
};

/// Closed-form eigenvalues. The discriminant is formed as ((a11-a22)/2)^2 + a12*a21 to avoid cancellation.
[[nodiscard]] inline Spectrum2 spectrum(const Mat2& m) noexcept {
    const double half_tr = 0.5 * (m.a11 + m.a22);
    const double half_diff = 0.5 * (m.a11 - m.a22);
    const double disc = half_diff * half_diff + m.a12 * m.a21;
    Spectrum2 s;
    if (disc >= 0.0) {
        const double root = std::sqrt(disc);
        s.kind = Spectrum2::Kind::Real;
        // Larger-magnitude root first, the other from the determinant when that is stable.
        const double big = half_tr >= 0.0 ? half_tr + root : half_tr - root;
        double small = half_tr >= 0.0 ? half_tr - root : half_tr + root;
        if (big != 0.0 && std::abs(big) > 1e-300) small = det(m) / big;
        s.lambda1 = std::min(big, small);
        s.lambda2 = std::max(big, small);
        s.abscissa = s.lambda2;
    } else {
        s.kind = Spectrum2::Kind::Complex;
        s.alpha = half_tr;
        s.beta = std::sqrt(-disc);
        s.abscissa = half_tr;
    }
    return s;
}

struct SingularValues {
    double s1 = 0.0;  ///< smallest
    double s2 = 0.0;  ///< largest
};

[[nodiscard]] inline SingularValues singular_values(const Mat2& m) noexcept {
    const double e = 0.5 * (m.a11 + m.a22);
    const double f = 0.5 * (m.a11 - m.a22);
    const double g = 0.5 * (m.a21 + m.a12);
    const double h = 0.5 * (m.a21 - m.a12);
    const double q = std::hypot(e, h);
    const double r = std::hypot(f, g);
    return {std::abs(q - r), q + r};
}

/// Unit right and left singular vectors for both singular values.
struct SingularFrame {
    SingularValues values;
    Vec2 right_small, right_large;  ///< eigenvectors of m^T m
    Vec2 left_small, left_large;    ///< m v / s, or a completing direction when s = 0
};

[[nodiscard]] inline SingularFrame singular_frame(const Mat2& m) {
    SingularFrame fr;
    fr.values = singular_values(m);
    const Mat2 g = transpose(m) * m;
    // Principal axis of the symmetric matrix g: angle of its largest eigenvector.
    const double theta = 0.5 * std::atan2(2.0 * g.a12, g.a11 - g.a22);
    fr.right_large = unit_at(theta);
    fr.right_small = perp(fr.right_large);
    const Vec2 ml = m * fr.right_large;
    const Vec2 ms = m * fr.right_small;
    fr.left_large = fr.values.s2 > 0.0 ? normalized(ml) : Vec2{1.0, 0.0};
    fr.left_small = fr.values.s1 > 1e-300 * std::max(1.0, fr.values.s2) && norm(ms) > 0.0 ? normalized(ms)
                                                                                          : -perp(fr.left_large);
    return fr;
}

/// Largest eigenvalue of the symmetric part of m.
[[nodiscard]] inline double max_eigenvalue_symmetric(const Mat2& m) noexcept {
    const double off = 0.5 * (m.a12 + m.a21);
    const double mid = 0.5 * (m.a11 + m.a22);
    const double half = 0.5 * (m.a11 - m.a22);
    return mid + std::hypot(half, off);
}

namespace detail {

/// Sign convention for line directions: x1 > 0, or x1 == 0 and x2 > 0.
inline Vec2 canonical_direction(Vec2 v) noexcept {
    if (v.x1 < 0.0 || (v.x1 == 0.0 && v.x2 < 0.0)) return -v;
    return v;
}

inline void require_rank_one(const Mat2& m) {
    const double f = frobenius_norm(m);
    if (!(f > 1e-300)) throw Error(ErrorCode::ZeroMatrix, "matrix is zero");
    if (!is_degenerate(m)) throw Error(ErrorCode::NotDegenerate, "matrix is not singular");
}

}  // namespace detail

/// Unit vector spanning Ker(m) for a singular, nonzero m.
[[nodiscard]] inline Vec2 kernel_direction(const Mat2& m) {
    detail::require_rank_one(m);
    const Vec2 r1{m.a11, m.a12};
    const Vec2 r2{m.a21, m.a22};
    const Vec2 row = norm(r1) >= norm(r2) ? r1 : r2;
    return detail::canonical_direction(normalized(Vec2{-row.x2, row.x1}));
}

/// Unit vector spanning Im(m) for a singular, nonzero m.
[[nodiscard]] inline Vec2 image_direction(const Mat2& m) {
    detail::require_rank_one(m);
    const Vec2 c1{m.a11, m.a21};
    const Vec2 c2{m.a12, m.a22};
    return detail::canonical_direction(normalized(norm(c1) >= norm(c2) ? c1 : c2));
}

/// exp(t m) in closed form via m = s I + B with B^2 = q I.
[[nodiscard]] inline Mat2 expm(const Mat2& m, double t) noexcept {
    const double s = 0.5 * (m.a11 + m.a22);
    const Mat2 b{m.a11 - s, m.a12, m.a21, m.a22 - s};
    const double q = b.a11 * b.a11 + b.a12 * b.a21;
    double c = 1.0, k = t;  // exp(tB) = c I + k B
    const double x2 = q * t * t;
    if (std::abs(x2) < 1e-8) {
        c = 1.0 + x2 / 2.0 + x2 * x2 / 24.0;
        k = t * (1.0 + x2 / 6.0 + x2 * x2 / 120.0);
    } else if (q > 0.0) {
        const double w = std::sqrt(q);
        c = std::cosh(w * t);
        k = std::sinh(w * t) / w;
    } else {
        const double w = std::sqrt(-q);
        c = std::cos(w * t);
        k = std::sin(w * t) / w;
    }
    const double e = std::exp(s * t);
    return {e * (c + k * b.a11), e * k * b.a12, e * k * b.a21, e * (c + k * b.a22)};
}

/// Directions gamma in [0, pi) where a cos^2 + b cos sin + d sin^2 vanishes, ascending.
/// A form that vanishes identically yields an empty list; callers handle that case separately.
[[nodiscard]] inline std::vector<double> null_directions(double a, double b, double d) {
    // q(g) = p + c cos 2g + s sin 2g
    const double p = 0.5 * (a + d);
    const double c = 0.5 * (a - d);
    const double s = 0.5 * b;
    const double amp = std::hypot(c, s);
    std::vector<double> out;
    if (!(amp > 0.0)) return out;
    const double ratio = -p / amp;
    if (ratio < -1.0 - 1e-15 || ratio > 1.0 + 1e-15) return out;
    const double phase = std::atan2(s, c);
    const double spread = std::acos(std::clamp(ratio, -1.0, 1.0));
    for (double two_g : {phase + spread, phase - spread}) {
        const double g = normalize_line_angle(0.5 * two_g);
        if (std::none_of(out.begin(), out.end(), [&](double o) { return std::abs(o - g) < 1e-15; }))
            out.push_back(g);
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Coefficients (a, b, d) of x -> cross(P x, Q x) as a cos^2 + b cos sin + d sin^2.
struct QuadraticForm {
    double a = 0.0, b = 0.0, d = 0.0;
};

[[nodiscard]] constexpr QuadraticForm cross_form(const Mat2& p, const Mat2& q) noexcept {
    // cross(Px, Qx) with x = (c, s).
    const double a = p.a11 * q.a21 - p.a21 * q.a11;
    const double d = p.a12 * q.a22 - p.a22 * q.a12;
    const double b = p.a11 * q.a22 + p.a12 * q.a21 - p.a21 * q.a12 - p.a22 * q.a11;
    return {a, b, d};
}

[[nodiscard]] inline std::string to_string(const Mat2& m) {
    auto f = [](double v) { return std::to_string(v); };
    return "[[" + f(m.a11) + "," + f(m.a12) + "],[" + f(m.a21) + "," + f(m.a22) + "]]";
}

[[nodiscard]] inline std::string to_string(const Vec2& v) {
    return "(" + std::to_string(v.x1) + "," + std::to_string(v.x2) + ")";
}

}  // namespace pswitch
