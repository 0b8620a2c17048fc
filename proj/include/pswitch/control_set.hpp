#pragma once

#include "errors.hpp"
#include "linalg.hpp"
#include "log.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace pswitch {

enum class Side { Left, Right };

[[nodiscard]] constexpr std::string_view to_string(Side side) noexcept {
    return side == Side::Left ? "left" : "right";
}

/// The compact control set. Every variant is stored as a list of centre matrices
/// plus one Frobenius radius: a finite set has radius zero, a ball has a single
/// centre, and a noisy sum has several centres sharing the noise radius.
class ControlSet {
public:
    enum class Kind { Finite, FrobeniusBall, NoisySum };

    [[nodiscard]] static ControlSet finite(const std::vector<Mat2>& matrices) {
        if (matrices.empty()) throw Error(ErrorCode::InvalidArgument, "finite control set is empty");
        ControlSet set;
        set.kind_ = Kind::Finite;
        for (const Mat2& m : matrices) {
            require_finite(m);
            if (is_identity_multiple(m)) {
                const double c = 0.5 * trace(m);
                set.identity_coefficient_ = std::max(set.identity_coefficient_.value_or(c), c);
                log(LogLevel::Warn, "dropping identity-proportional generator " + to_string(m));
                continue;
            }
            set.centers_.push_back(m);
        }
        if (set.centers_.empty())
            throw Error(ErrorCode::InvalidArgument, "control set contains only multiples of the identity");
        return set;
    }

    [[nodiscard]] static ControlSet frobenius_ball(const Mat2& center, double radius) {
        require_finite(center);
        if (!(radius >= 0.0) || !std::isfinite(radius))
            throw Error(ErrorCode::InvalidArgument, "ball radius must be finite and nonnegative");
        ControlSet set;
        set.kind_ = Kind::FrobeniusBall;
        set.centers_ = {center};
        set.radius_ = radius;
        return set;
    }

    /// Finite base list plus a Frobenius-ball perturbation of every member.
    [[nodiscard]] static ControlSet noisy_ball(const std::vector<Mat2>& base, double radius) {
        if (base.empty()) throw Error(ErrorCode::InvalidArgument, "noisy control set has no base matrices");
        if (base.size() == 1) return frobenius_ball(base.front(), radius);
        if (!(radius >= 0.0) || !std::isfinite(radius))
            throw Error(ErrorCode::InvalidArgument, "noise radius must be finite and nonnegative");
        if (radius == 0.0) return finite(base);
        ControlSet set;
        set.kind_ = Kind::NoisySum;
        for (const Mat2& m : base) require_finite(m);
        set.centers_ = base;
        set.radius_ = radius;
        return set;
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] bool is_finite_set() const noexcept { return kind_ == Kind::Finite; }

    /// Finite generators, the ball centre, or the noisy base list.
    [[nodiscard]] const std::vector<Mat2>& centers() const noexcept { return centers_; }
    [[nodiscard]] const std::vector<Mat2>& generators() const noexcept { return centers_; }
    [[nodiscard]] const Mat2& center() const noexcept { return centers_.front(); }
    [[nodiscard]] double radius() const noexcept { return radius_; }

    /// Accumulated alpha of all shifts A -> A - alpha I applied so far.
    [[nodiscard]] double shift() const noexcept { return shift_; }

    /// Largest coefficient c among dropped generators c I, if any were dropped.
    [[nodiscard]] std::optional<double> identity_coefficient() const noexcept { return identity_coefficient_; }

    [[nodiscard]] ControlSet shifted(double alpha) const {
        ControlSet out = *this;
        for (Mat2& m : out.centers_) {
            m.a11 -= alpha;
            m.a22 -= alpha;
        }
        if (out.identity_coefficient_) *out.identity_coefficient_ -= alpha;
        out.shift_ += alpha;
        return out;
    }

    /// A real direction invariant under every generator, if one exists.
    [[nodiscard]] std::optional<Vec2> common_eigenvector() const {
        if (kind_ != Kind::Finite && radius_ > 0.0) return std::nullopt;
        const Spectrum2 first = spectrum(centers_.front());
        if (first.kind == Spectrum2::Kind::Complex) return std::nullopt;
        for (double lambda : {first.lambda2, first.lambda1}) {
            const Mat2 shifted_first = centers_.front() - lambda * Mat2::identity();
            Vec2 v;
            if (frobenius_norm(shifted_first) <= 1e-300) continue;
            const Vec2 r1{shifted_first.a11, shifted_first.a12};
            const Vec2 r2{shifted_first.a21, shifted_first.a22};
            const Vec2 row = norm(r1) >= norm(r2) ? r1 : r2;
            v = normalized(Vec2{-row.x2, row.x1});
            const bool shared = std::all_of(centers_.begin(), centers_.end(), [&](const Mat2& m) {
                return std::abs(cross(v, m * v)) <= 1e-10 * std::max(frobenius_norm(m), 1e-300);
            });
            if (shared) return detail::canonical_direction(v);
        }
        return std::nullopt;
    }

    [[nodiscard]] std::string describe() const {
        switch (kind_) {
            case Kind::Finite: return "finite set of " + std::to_string(centers_.size()) + " matrices";
            case Kind::FrobeniusBall: return "Frobenius ball of radius " + std::to_string(radius_);
            case Kind::NoisySum:
                return std::to_string(centers_.size()) + " matrices with Frobenius noise " + std::to_string(radius_);
        }
        return {};
    }

private:
    static void require_finite(const Mat2& m) {
        if (!is_finite(m)) throw Error(ErrorCode::InvalidArgument, "matrix entries must be finite");
    }

    Kind kind_ = Kind::Finite;
    std::vector<Mat2> centers_;
    double radius_ = 0.0;
    double shift_ = 0.0;
    std::optional<double> identity_coefficient_;
};

/// Leading left/right matrix at a point. `image` is matrix * x; `angle` is the
/// oriented angle from x to the image. `generator` indexes centers(), or is -1
/// for a ball tangent.
struct LeadingDirection {
    bool defined = false;
    Mat2 matrix{};
    Vec2 image{};
    double angle = 0.0;
    int generator = -1;
};

namespace detail {

inline constexpr double angle_tie = 1e-12;

/// Image disc of centre i at x: centre A_i x, radius r |x|.
struct DiscTangent {
    bool valid = false;
    double angle = 0.0;
    Vec2 point{};
};

/// Extreme tangent of the disc centred at c of radius rho, seen from the origin,
/// as an angle relative to x. Invalid when the disc swallows the origin, meets
/// the ray through x, or has no tangent on the requested side.
inline DiscTangent disc_tangent(const Vec2& x, const Vec2& c, double rho, Side side) {
    DiscTangent out;
    const double dist = norm(c);
    if (!(dist > rho)) return out;
    double theta = std::atan2(cross(x, c), dot(x, c));  // (-pi, pi]
    if (theta <= 0.0) theta += two_pi;                    // (0, 2pi]
    const double half = std::asin(std::min(1.0, rho / dist));
    if (theta - half <= 0.0 || theta + half >= two_pi) return out;
    const double a = side == Side::Left ? theta - half : theta + half - two_pi;
    if (side == Side::Left ? !(a < pi) : !(a > -pi)) return out;
    out.valid = true;
    out.angle = a;
    const double reach = std::sqrt(std::max(0.0, (dist - rho) * (dist + rho)));
    out.point = rotated(normalized(x), a) * reach;
    return out;
}

/// Leading direction without the feasibility screen; used on hot paths.
inline LeadingDirection leading_unchecked(const ControlSet& set, const Vec2& x, Side side) {
    LeadingDirection best;
    const auto& cs = set.centers();
    const double rho = set.radius() * norm(x);
    for (std::size_t i = 0; i < cs.size(); ++i) {
        Vec2 image;
        Mat2 matrix = cs[i];
        double angle;
        if (rho == 0.0) {
            image = cs[i] * x;
            if (image.x1 == 0.0 && image.x2 == 0.0) continue;
            angle = oriented_angle(x, image);
            if (side == Side::Left ? !(angle > 0.0 && angle < pi) : !(angle < 0.0 && angle > -pi)) continue;
        } else {
            const Vec2 c = cs[i] * x;
            const DiscTangent t = disc_tangent(x, c, rho, side);
            if (!t.valid) continue;
            image = t.point;
            angle = t.angle;
            const double xx = dot(x, x);
            matrix = cs[i] + outer(t.point - c, Vec2{x.x1 / xx, x.x2 / xx});
        }
        bool take = !best.defined;
        if (!take) {
            const double gain = side == Side::Left ? best.angle - angle : angle - best.angle;
            if (gain > angle_tie) take = true;
            else if (gain >= -angle_tie && norm(image) > norm(best.image) * (1.0 + 1e-12)) take = true;
        }
        if (take) {
            best.defined = true;
            best.matrix = matrix;
            best.image = image;
            best.angle = angle;
            best.generator = set.kind() == ControlSet::Kind::FrobeniusBall ? -1 : static_cast<int>(i);
        }
    }
    return best;
}

/// Points p_i in the frame of unit x: along = <x, p>, across = cross(x, p).
struct FramePoint {
    double along, across;
};

/// Whether conv{points} meets the closed ray {t e1 : t >= 0} of the frame.
inline bool hull_meets_ray(const std::vector<FramePoint>& pts, double tiny) {
    for (const FramePoint& p : pts)
        if (std::abs(p.across) <= tiny && p.along >= -tiny) return true;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (!(pts[i].across > tiny)) continue;
        for (std::size_t j = 0; j < pts.size(); ++j) {
            if (!(pts[j].across < -tiny)) continue;
            const double w = pts[i].across - pts[j].across;
            const double along = (pts[i].along * -pts[j].across + pts[j].along * pts[i].across) / w;
            if (along >= -tiny) return true;
        }
    }
    return false;
}

inline double point_ray_distance(const FramePoint& p) {
    return p.along >= 0.0 ? std::abs(p.across) : std::hypot(p.along, p.across);
}

inline double origin_segment_distance(const FramePoint& p, const FramePoint& q) {
    const double dx = q.along - p.along, dy = q.across - p.across;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? -(p.along * dx + p.across * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.along + t * dx, p.across + t * dy);
}

/// Distance between conv{A_i x} and the closed ray through unit x.
inline double hull_ray_distance(const std::vector<Mat2>& centers, const Vec2& x) {
    std::vector<FramePoint> pts;
    pts.reserve(centers.size());
    double scale = 0.0;
    for (const Mat2& m : centers) {
        const Vec2 p = m * x;
        pts.push_back({dot(x, p), cross(x, p)});
        scale = std::max(scale, norm(p));
    }
    if (hull_meets_ray(pts, 0.0)) return 0.0;
    double best = 1e300;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        best = std::min(best, point_ray_distance(pts[i]));
        for (std::size_t j = i + 1; j < pts.size(); ++j) best = std::min(best, origin_segment_distance(pts[i], pts[j]));
    }
    return best;
}

/// Minimiser over s in [0, pi) of f(s), by a 4096-point scan refined with Brent's method
/// around the best few grid minima.
template <class F>
std::pair<double, double> minimize_on_half_turn(F&& f, int grid = 4096) {
    std::vector<double> values(grid);
    const double h = pi / grid;
    for (int k = 0; k < grid; ++k) values[k] = f(k * h);
    std::vector<int> minima;
    for (int k = 0; k < grid; ++k) {
        const double prev = values[(k + grid - 1) % grid], next = values[(k + 1) % grid];
        if (values[k] <= prev && values[k] <= next) minima.push_back(k);
    }
    std::sort(minima.begin(), minima.end(), [&](int a, int b) { return values[a] < values[b]; });
    if (minima.size() > 8) minima.resize(8);
    double best_s = minima.empty() ? 0.0 : minima.front() * h;
    double best_v = minima.empty() ? f(0.0) : values[minima.front()];
    for (int k : minima) {
        std::uintmax_t iters = 200;
        const auto r = boost::math::tools::brent_find_minima(f, (k - 1) * h, (k + 1) * h, 52, iters);
        if (r.second < best_v) {
            best_v = r.second;
            best_s = r.first;
        }
    }
    return {best_s, best_v};
}

}  // namespace detail

/// True iff no matrix of co(set) maps x to a nonnegative multiple of itself.
[[nodiscard]] inline bool is_feasible(const ControlSet& set, const Vec2& x) {
    if (x.x1 == 0.0 && x.x2 == 0.0) throw Error(ErrorCode::ZeroVector, "feasibility needs a nonzero point");
    if (set.identity_coefficient() && *set.identity_coefficient() >= 0.0) return false;
    const Vec2 u = normalized(x);
    if (set.radius() > 0.0) return detail::hull_ray_distance(set.centers(), u) > set.radius();
    std::vector<detail::FramePoint> pts;
    double scale = 0.0;
    for (const Mat2& m : set.centers()) {
        const Vec2 p = m * u;
        pts.push_back({dot(u, p), cross(u, p)});
        scale = std::max(scale, frobenius_norm(m));
    }
    return !detail::hull_meets_ray(pts, 1e-14 * scale);
}

[[nodiscard]] inline LeadingDirection leading(const ControlSet& set, const Vec2& x, Side side) {
    if (x.x1 == 0.0 && x.x2 == 0.0) throw Error(ErrorCode::ZeroVector, "leading direction needs a nonzero point");
    if (!is_feasible(set, x))
        throw Error(ErrorCode::Infeasible, "point " + to_string(x) + " is an eigenvector with a nonnegative eigenvalue");
    return detail::leading_unchecked(set, x, side);
}

/// Witness of a nonnegative real eigenvalue in co(set).
struct EigenWitness {
    Mat2 matrix{};
    Vec2 eigenvector{};
    double eigenvalue = 0.0;
};

namespace detail {

inline std::optional<EigenWitness> witness_of(const Mat2& m) {
    const Spectrum2 s = spectrum(m);
    if (s.kind != Spectrum2::Kind::Real || s.lambda2 < 0.0) return std::nullopt;
    const Mat2 k = m - s.lambda2 * Mat2::identity();
    Vec2 v{1.0, 0.0};
    if (frobenius_norm(k) > 0.0) {
        const Vec2 r1{k.a11, k.a12}, r2{k.a21, k.a22};
        const Vec2 row = norm(r1) >= norm(r2) ? r1 : r2;
        v = normalized(Vec2{-row.x2, row.x1});
    }
    return EigenWitness{m, canonical_direction(v), s.lambda2};
}

/// Real roots of c2 t^2 + c1 t + c0 inside [0, 1]; a nearly vanishing discriminant counts as a double root.
inline void unit_roots(double c0, double c1, double c2, std::vector<double>& out) {
    const double scale = std::abs(c0) + std::abs(c1) + std::abs(c2);
    if (!(scale > 0.0)) return;
    auto keep = [&](double t) {
        if (t >= 0.0 && t <= 1.0) out.push_back(t);
    };
    if (std::abs(c2) <= 1e-14 * scale) {
        if (std::abs(c1) > 1e-14 * scale) keep(-c0 / c1);
        return;
    }
    double disc = c1 * c1 - 4.0 * c2 * c0;
    if (disc < 0.0 && disc > -1e-10 * (c1 * c1 + std::abs(4.0 * c2 * c0))) disc = 0.0;
    if (disc < 0.0) return;
    const double root = std::sqrt(disc);
    const double q = -0.5 * (c1 + (c1 >= 0.0 ? root : -root));
    if (q != 0.0) {
        keep(q / c2);
        keep(c0 / q);
    } else {
        keep(0.0);
    }
}

/// Quadratic coefficients of t -> f((1-t) a + t b) from samples at 0, 1/2, 1.
template <class F>
std::array<double, 3> segment_quadratic(const Mat2& a, const Mat2& b, F&& f) {
    const double p0 = f(a), p1 = f(b), ph = f(0.5 * (a + b));
    const double c2 = 2.0 * p1 + 2.0 * p0 - 4.0 * ph;
    return {p0, p1 - p0 - c2, c2};
}

inline std::optional<EigenWitness> finite_hull_witness(const std::vector<Mat2>& gens) {
    for (const Mat2& m : gens)
        if (auto w = witness_of(m)) return w;
    for (std::size_t i = 0; i < gens.size(); ++i) {
        for (std::size_t j = i + 1; j < gens.size(); ++j) {
            const Mat2& a = gens[i];
            const Mat2& b = gens[j];
            std::vector<double> ts{0.0, 1.0};
            const auto dq = segment_quadratic(a, b, [](const Mat2& m) { return det(m); });
            unit_roots(dq[0], dq[1], dq[2], ts);
            const auto disc = segment_quadratic(a, b, [](const Mat2& m) {
                const double h = 0.5 * (m.a11 - m.a22);
                return h * h + m.a12 * m.a21;
            });
            unit_roots(disc[0], disc[1], disc[2], ts);
            const double tr0 = trace(a), tr1 = trace(b);
            if (tr0 != tr1) {
                const double t = tr0 / (tr0 - tr1);
                if (t >= 0.0 && t <= 1.0) ts.push_back(t);
            }
            std::sort(ts.begin(), ts.end());
            const std::size_t n = ts.size();
            for (std::size_t k = 0; k + 1 < n; ++k) ts.push_back(0.5 * (ts[k] + ts[k + 1]));
            for (double t : ts)
                if (auto w = witness_of((1.0 - t) * a + t * b)) return w;
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Searches co(set) for a matrix with a real eigenvalue >= 0.
[[nodiscard]] inline std::optional<EigenWitness> nonneg_eigenvalue_witness(const ControlSet& set) {
    if (set.identity_coefficient() && *set.identity_coefficient() >= 0.0) {
        const double c = *set.identity_coefficient();
        return EigenWitness{c * Mat2::identity(), {1.0, 0.0}, c};
    }
    if (set.radius() == 0.0) return detail::finite_hull_witness(set.centers());
    const auto [s, d] = detail::minimize_on_half_turn(
        [&](double angle) { return detail::hull_ray_distance(set.centers(), unit_at(angle)); });
    if (d > set.radius()) return std::nullopt;
    // Build the witness from the closest centre matrix (exact for a single ball).
    const Vec2 x = unit_at(s);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t i = 0; i < set.centers().size(); ++i) {
        const Vec2 p = set.centers()[i] * x;
        const double di = detail::point_ray_distance({dot(x, p), cross(x, p)});
        if (di < best_d) {
            best_d = di;
            best = i;
        }
    }
    const Mat2& c = set.centers()[best];
    const Vec2 p = c * x;
    const double lambda = std::max(0.0, dot(x, p));
    const Mat2 m = c + outer(lambda * x - p, x);
    return EigenWitness{m, x, lambda};
}

[[nodiscard]] inline bool ball_has_nonneg_eigenvalue(const Mat2& center, double r) {
    if (r < 0.0) throw Error(ErrorCode::InvalidArgument, "radius must be nonnegative");
    if (r == 0.0) return detail::witness_of(center).has_value();
    return nonneg_eigenvalue_witness(ControlSet::frobenius_ball(center, r)).has_value();
}

struct BallDegeneracy {
    std::optional<Mat2> matrix;  ///< the unique singular matrix when r equals the smallest singular value
    bool non_unique = false;     ///< r exceeds the smallest singular value: a whole family is singular
};

/// Singular matrices of the ball: none below the smallest singular value s1,
/// exactly one at s1 (the centre minus s1 * u v^T), infinitely many above.
[[nodiscard]] inline BallDegeneracy ball_degenerate(const Mat2& center, double r, double rel_tol = 1e-9) {
    if (r < 0.0) throw Error(ErrorCode::InvalidArgument, "radius must be nonnegative");
    const SingularFrame fr = singular_frame(center);
    const double tol = rel_tol * std::max(1.0, fr.values.s2);
    BallDegeneracy out;
    if (r < fr.values.s1 - tol) return out;
    if (r > fr.values.s1 + tol) {
        out.non_unique = true;
        return out;
    }
    out.matrix = center - fr.values.s1 * outer(fr.left_small, fr.right_small);
    return out;
}

struct ReversePencil {
    Mat2 a1{}, a2{};
    Vec2 kernel1{}, kernel2{};
    Vec2 image{};
    int index1 = -1, index2 = -1;
};

enum class DegenerateProvenance { Vertex, PencilInterior, SameKernelCombination, Isolated };

[[nodiscard]] constexpr std::string_view to_string(DegenerateProvenance p) noexcept {
    switch (p) {
        case DegenerateProvenance::Vertex: return "vertex";
        case DegenerateProvenance::PencilInterior: return "pencil-interior";
        case DegenerateProvenance::SameKernelCombination: return "same-kernel-combination";
        case DegenerateProvenance::Isolated: return "isolated";
    }
    return "unknown";
}

/// A singular matrix of co(set). For segment points, `t` is the position on the
/// segment from generator index1 (t = 0) to index2 (t = 1).
struct DegenerateMatrix {
    Mat2 matrix{};
    DegenerateProvenance provenance = DegenerateProvenance::Vertex;
    Vec2 kernel{};
    int index1 = -1, index2 = -1;
    double t = 0.0;
    std::optional<ReversePencil> pencil;
};

namespace detail {

/// Kernel of a numerically singular matrix taken from its larger row.
inline Vec2 dominant_row_kernel(const Mat2& m) {
    const Vec2 r1{m.a11, m.a12}, r2{m.a21, m.a22};
    const Vec2 row = norm(r1) >= norm(r2) ? r1 : r2;
    return canonical_direction(normalized(Vec2{-row.x2, row.x1}));
}

inline bool collinear(const Vec2& a, const Vec2& b, double tol = 1e-9) { return std::abs(cross(a, b)) <= tol; }

inline void require_finite_kind(const ControlSet& set, const char* what) {
    if (set.radius() != 0.0)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + " needs a finite control set");
}

}  // namespace detail

/// Pairs of singular generators sharing their image line but not their kernel.
[[nodiscard]] inline std::vector<ReversePencil> reverse_pencils(const ControlSet& set) {
    detail::require_finite_kind(set, "reverse pencil detection");
    const auto& g = set.centers();
    std::vector<ReversePencil> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!is_degenerate(g[i])) continue;
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            if (!is_degenerate(g[j])) continue;
            const Vec2 im1 = image_direction(g[i]), im2 = image_direction(g[j]);
            const Vec2 k1 = kernel_direction(g[i]), k2 = kernel_direction(g[j]);
            if (detail::collinear(im1, im2) && !detail::collinear(k1, k2))
                out.push_back({g[i], g[j], k1, k2, im1, static_cast<int>(i), static_cast<int>(j)});
        }
    }
    return out;
}

/// Enumerates the singular matrices of co(set): singular vertices, whole singular
/// segments (reverse pencils or shared kernels), and isolated segment roots.
[[nodiscard]] inline std::vector<DegenerateMatrix> degenerate_in_hull(const ControlSet& set) {
    detail::require_finite_kind(set, "degenerate enumeration");
    const auto& g = set.centers();
    std::vector<DegenerateMatrix> out;
    std::vector<Vec2> vertex_kernels;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!is_degenerate(g[i])) continue;
        DegenerateMatrix d;
        d.matrix = g[i];
        d.kernel = kernel_direction(g[i]);
        d.index1 = d.index2 = static_cast<int>(i);
        out.push_back(d);
        vertex_kernels.push_back(d.kernel);
    }
    const auto pencils = reverse_pencils(set);
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            const Mat2& a = g[i];
            const Mat2& b = g[j];
            const double scale = std::pow(frobenius_norm(a) + frobenius_norm(b), 2);
            const auto q = detail::segment_quadratic(a, b, [](const Mat2& m) { return det(m); });
            const bool identically = std::abs(q[0]) <= det_tolerance * scale &&
                                     std::abs(q[1]) <= det_tolerance * scale &&
                                     std::abs(q[2]) <= det_tolerance * scale;
            if (identically) {
                DegenerateMatrix d;
                d.matrix = 0.5 * (a + b);
                d.index1 = static_cast<int>(i);
                d.index2 = static_cast<int>(j);
                d.t = 0.5;
                if (frobenius_norm(d.matrix) <= 1e-300) continue;
                d.kernel = kernel_direction(d.matrix);
                const auto p = std::find_if(pencils.begin(), pencils.end(), [&](const ReversePencil& rp) {
                    return rp.index1 == d.index1 && rp.index2 == d.index2;
                });
                if (p != pencils.end()) {
                    d.provenance = DegenerateProvenance::PencilInterior;
                    d.pencil = *p;
                } else {
                    d.provenance = DegenerateProvenance::SameKernelCombination;
                }
                out.push_back(d);
                continue;
            }
            std::vector<double> ts;
            detail::unit_roots(q[0], q[1], q[2], ts);
            std::sort(ts.begin(), ts.end());
            ts.erase(std::unique(ts.begin(), ts.end(), [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                     ts.end());
            for (double t : ts) {
                if (t <= 1e-12 || t >= 1.0 - 1e-12) continue;
                DegenerateMatrix d;
                d.matrix = (1.0 - t) * a + t * b;
                d.index1 = static_cast<int>(i);
                d.index2 = static_cast<int>(j);
                d.t = t;
                if (frobenius_norm(d.matrix) <= 1e-300 || !is_degenerate(d.matrix, 1e-8)) continue;
                d.kernel = detail::dominant_row_kernel(d.matrix);
                const bool shared = std::any_of(vertex_kernels.begin(), vertex_kernels.end(),
                                                [&](const Vec2& k) { return detail::collinear(k, d.kernel); });
                d.provenance = shared ? DegenerateProvenance::SameKernelCombination : DegenerateProvenance::Isolated;
                out.push_back(d);
            }
        }
    }
    return out;
}

}  // namespace pswitch
