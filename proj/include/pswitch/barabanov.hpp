#pragma once

#include <pswitch/control_set.hpp>
#include <pswitch/errors.hpp>
#include <pswitch/linalg.hpp>
#include <pswitch/log.hpp>
#include <pswitch/stability.hpp>
#include <pswitch/trajectory.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pswitch {

/// One piece of the half-sphere over polar angles [begin, end]. Angles are absolute,
/// begin <= end, and the pieces of a partition cover [origin, origin + pi].
struct IntervalTag {
    enum class Kind { R, D, H, P };
    Kind kind = Kind::P;
    double begin = 0.0;
    double end = 0.0;
    std::optional<ReversePencil> pencil;  ///< R: the straight stretch is parallel to pencil->image
    std::vector<Mat2> kernel_matrices;    ///< D: singular matrices whose kernel is this direction
    /// H: Left puts the source at `begin` with a counterclockwise trajectory across;
    /// Right puts it at `end` with a clockwise one.
    Side source_end = Side::Left;
    double m = -std::numeric_limits<double>::infinity();  ///< P: admissible increments [m, M]
    double M = std::numeric_limits<double>::infinity();
    double s = 0.0;      ///< P: chosen increment
    double delta = 0.0;  ///< g(end) - g(begin)
};

[[nodiscard]] constexpr std::string_view to_string(IntervalTag::Kind k) noexcept {
    switch (k) {
        case IntervalTag::Kind::R: return "R";
        case IntervalTag::Kind::D: return "D";
        case IntervalTag::Kind::H: return "H";
        case IntervalTag::Kind::P: return "P";
    }
    return "?";
}

struct UniquenessReport {
    enum class Reason { AtMostOneDegenerate, SingletonP, BoundaryBudget, InfinitelyMany, Unclassified };
    bool unique = false;
    Reason reason = Reason::Unclassified;
    std::vector<std::string> slack;  ///< P intervals whose increment can move inside its bracket
};

[[nodiscard]] constexpr std::string_view to_string(UniquenessReport::Reason r) noexcept {
    switch (r) {
        case UniquenessReport::Reason::AtMostOneDegenerate: return "at-most-one-degenerate";
        case UniquenessReport::Reason::SingletonP: return "single-free-interval";
        case UniquenessReport::Reason::BoundaryBudget: return "budget-on-boundary";
        case UniquenessReport::Reason::InfinitelyMany: return "infinitely-many";
        case UniquenessReport::Reason::Unclassified: return "unclassified";
    }
    return "unknown";
}

struct BuildOptions {
    double sigma_tol = 1e-6;       ///< accepted distance of the exponent from zero
    double closure_tol = 1e-6;     ///< accepted |g(origin + pi) - g(origin)|
    double meet_tolerance = 1e-10; ///< g-accuracy of the crossing of two trajectories
    IntegrationOptions integration{};
};

namespace detail {

/// Polar curve g(gamma) = offset + sample.g + integral of the leading slope on one side,
/// valid on [lo, hi].
struct Branch {
    Side side = Side::Left;
    double lo = 0.0, hi = 0.0;
    double offset = 0.0;
    std::vector<PolarSample> samples;  ///< ascending gamma
    SlopeIntegral result;              ///< integral from the anchor to the far end

    [[nodiscard]] double eval(const ControlSet& set, double gamma, const IntegrationOptions& opt) const {
        if (gamma < lo - 1e-12 || gamma > hi + 1e-12) return std::numeric_limits<double>::infinity();
        auto it = std::lower_bound(samples.begin(), samples.end(), gamma,
                                   [](const PolarSample& s, double v) { return s.gamma < v; });
        if (it == samples.end()) --it;
        if (it != samples.begin() && std::abs(std::prev(it)->gamma - gamma) < std::abs(it->gamma - gamma)) --it;
        if (it->gamma == gamma) return offset + it->g;
        double err = 0.0;
        return offset + it->g + pswitch::detail::panel_integral(set, side, it->gamma, gamma, opt, err);
    }
};

inline Branch trace_branch(const ControlSet& set, Side side, double from, double to, const IntegrationOptions& opt) {
    Branch b;
    b.side = side;
    b.samples.push_back({from, 0.0});
    b.result = integrate_slope(set, side, from, to, opt,
                               [&](double gamma, double integral, int) { b.samples.push_back({gamma, integral}); });
    std::sort(b.samples.begin(), b.samples.end(), [](const PolarSample& a, const PolarSample& c) { return a.gamma < c.gamma; });
    b.lo = std::min(from, b.result.reached);
    b.hi = std::max(from, b.result.reached);
    return b;
}

inline bool reaches(const Branch& b) { return b.result.completed || b.result.divergent; }

/// Whether the branch exists beyond its anchor at all.
inline bool leaves_anchor(const Branch& b) { return b.result.completed || b.hi - b.lo > 1e-12; }

}  // namespace detail

/// Closed convex symmetric curve given by ln r(gamma); the half over
/// [origin, origin + pi] determines the rest.
class SphereModel {
public:
    enum class Kind { Ellipse, Periodic, Partitioned, Polygon };

    /// The curve x^T M x = 1.
    [[nodiscard]] static SphereModel ellipse(const Mat2& m) {
        if (!(m.a11 > 0.0) || !(m.a11 * m.a22 - m.a12 * m.a21 > 0.0))
            throw Error(ErrorCode::InvalidArgument, "ellipse matrix must be positive definite");
        SphereModel s;
        s.kind_ = Kind::Ellipse;
        s.ellipse_ = Mat2{m.a11, 0.5 * (m.a12 + m.a21), 0.5 * (m.a12 + m.a21), m.a22};
        return s;
    }

    /// Convex polygon listed counterclockwise and containing the origin.
    [[nodiscard]] static SphereModel polygon(std::vector<Vec2> vertices) {
        if (vertices.size() < 3) throw Error(ErrorCode::InvalidPolygon, "polygon needs at least three vertices");
        for (std::size_t i = 0; i < vertices.size(); ++i) {
            const Vec2 p = vertices[i], q = vertices[(i + 1) % vertices.size()];
            if (!(cross(p, q) > 0.0))
                throw Error(ErrorCode::InvalidPolygon, "polygon must wind counterclockwise around the origin");
        }
        SphereModel s;
        s.kind_ = Kind::Polygon;
        s.polygon_ = std::move(vertices);
        return s;
    }

    [[nodiscard]] Kind kind() const noexcept { return kind_; }
    [[nodiscard]] double origin() const noexcept { return origin_; }
    [[nodiscard]] const std::vector<IntervalTag>& partition() const noexcept { return partition_; }
    [[nodiscard]] const UniquenessReport& uniqueness() const noexcept { return uniqueness_; }
    [[nodiscard]] double closure_error() const noexcept { return closure_; }
    [[nodiscard]] const std::vector<double>& meeting_points() const noexcept { return meets_; }
    [[nodiscard]] const std::optional<Mat2>& ellipse_matrix() const noexcept { return ellipse_; }

    [[nodiscard]] double log_radius(double gamma) const {
        switch (kind_) {
            case Kind::Ellipse: {
                const Vec2 u = unit_at(gamma);
                return -0.5 * std::log(dot(u, *ellipse_ * u));
            }
            case Kind::Polygon: return std::log(polygon_hit(gamma).first);
            default: break;
        }
        const double g = reduce(gamma, true);
        return eval_piece(piece_at(g, true), g);
    }

    [[nodiscard]] double radius(double gamma) const { return std::exp(log_radius(gamma)); }
    [[nodiscard]] Vec2 point(double gamma) const { return radius(gamma) * unit_at(gamma); }

    /// One-sided derivative of ln r at gamma, from above (forward) or below.
    [[nodiscard]] double slope(double gamma, bool forward) const {
        const Vec2 u = unit_at(gamma), du = perp(u);
        switch (kind_) {
            case Kind::Ellipse: return -dot(u, *ellipse_ * du) / dot(u, *ellipse_ * u);
            case Kind::Polygon: {
                const double h = forward ? 1e-9 : -1e-9;
                const Vec2 e = polygon_hit(gamma + h).second;
                return -cross(du, e) / cross(u, e);
            }
            default: break;
        }
        const double g = reduce(gamma, forward);
        const Piece& p = pieces_[piece_at(g, forward)];
        if (p.branch < 0) return -cross(du, p.direction) / cross(u, p.direction);
        // One-sided: exactly on a kernel direction the singular image drops out of the choice.
        for (double step : {1e-9, 1e-8, 1e-7, 1e-6}) {
            const double inside = std::clamp(g + (forward ? step : -step), p.begin, p.end);
            if (auto f = leading_slope(*set_, inside, branches_[p.branch].side); f && std::isfinite(*f)) return *f;
        }
        const double h = 1e-7;
        const std::size_t idx = piece_at(g, forward);
        return forward ? (eval_piece(idx, g + h) - eval_piece(idx, g)) / h
                       : (eval_piece(idx, g) - eval_piece(idx, g - h)) / h;
    }

    /// Unit tangent leaving the point counterclockwise (forward) or clockwise.
    [[nodiscard]] Vec2 tangent(double gamma, bool forward) const {
        const double s = slope(gamma, forward);
        const Vec2 u = unit_at(gamma);
        Vec2 t = std::isfinite(s) ? normalized(s * u + perp(u)) : (s > 0 ? u : -u);
        return forward ? t : -t;
    }

    /// Polar angles in [origin, origin + pi) where the curve turns by more than `min_turn`.
    [[nodiscard]] std::vector<double> corners(double min_turn = 1e-3) const {
        std::vector<double> candidates;
        if (kind_ == Kind::Polygon) {
            for (const Vec2& v : polygon_) candidates.push_back(reduce(angle_of(v), true));
        } else {
            for (const Piece& p : pieces_) candidates.push_back(p.begin);
        }
        std::vector<double> out;
        for (double c : candidates) {
            const Vec2 in = -tangent(c, false), out_t = tangent(c, true);
            if (std::abs(std::atan2(cross(in, out_t), dot(in, out_t))) > min_turn) out.push_back(c);
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                  out.end());
        return out;
    }

    [[nodiscard]] bool is_corner(double gamma, double within, double min_turn = 1e-3) const {
        for (double c : corners(min_turn)) {
            if (std::abs(std::remainder(gamma - c, pi)) <= within) return true;
        }
        return false;
    }

    /// Points of the closed curve at n equally spaced polar angles starting at 0.
    [[nodiscard]] std::vector<Vec2> polyline(int n) const {
        std::vector<Vec2> out;
        out.reserve(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) out.push_back(point(k * two_pi / n));
        return out;
    }

private:
    struct Piece {
        double begin = 0.0, end = 0.0;
        int branch = -1;      ///< index into branches_, or -1 for a straight stretch
        Vec2 anchor{};        ///< straight stretch: its point at `begin`
        Vec2 direction{};     ///< straight stretch: its direction
    };

    [[nodiscard]] double reduce(double gamma, bool forward) const {
        double t = std::fmod(gamma - origin_, pi);
        if (t < 0.0) t += pi;
        if (!forward && t == 0.0) t = pi;
        return origin_ + t;
    }

    [[nodiscard]] std::size_t piece_at(double g, bool forward) const {
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const Piece& p = pieces_[i];
            if (forward ? (g >= p.begin && g < p.end) : (g > p.begin && g <= p.end)) return i;
        }
        return forward ? pieces_.size() - 1 : 0;
    }

    [[nodiscard]] double eval_piece(std::size_t idx, double g) const {
        const Piece& p = pieces_[idx];
        if (p.branch >= 0) return branches_[p.branch].eval(*set_, g, integration_);
        return std::log(cross(p.anchor, p.direction) / cross(unit_at(g), p.direction));
    }

    /// Distance along the ray and direction of the polygon edge it hits.
    [[nodiscard]] std::pair<double, Vec2> polygon_hit(double gamma) const {
        const Vec2 u = unit_at(gamma);
        for (std::size_t i = 0; i < polygon_.size(); ++i) {
            const Vec2 p = polygon_[i], q = polygon_[(i + 1) % polygon_.size()];
            if (cross(p, u) >= 0.0 && cross(u, q) > 0.0) {
                const Vec2 e = q - p;
                return {cross(p, e) / cross(u, e), e};
            }
        }
        throw Error(ErrorCode::InvalidPolygon, "ray misses the polygon");
    }

    Kind kind_ = Kind::Periodic;
    double origin_ = 0.0;
    double closure_ = 0.0;
    std::optional<Mat2> ellipse_;
    std::vector<Vec2> polygon_;
    std::shared_ptr<const ControlSet> set_;
    IntegrationOptions integration_;
    std::vector<detail::Branch> branches_;
    std::vector<Piece> pieces_;
    std::vector<IntervalTag> partition_;
    std::vector<double> meets_;
    UniquenessReport uniqueness_;

    friend class SphereAssembler;
};

struct CheckReport {
    bool passed = false;
    double worst_outward = -std::numeric_limits<double>::infinity();  ///< largest outward speed per unit radius
    double worst_outward_angle = 0.0;
    double worst_tangent_gap = 0.0;  ///< largest distance from tangency of the fastest velocity
    double worst_tangent_angle = 0.0;
    int samples = 0;
};

/// Samples the curve and measures, at each point, the largest component of any
/// admissible velocity along the outward normals of the two one-sided tangents,
/// relative to |x|. An invariant sphere keeps it at or below zero everywhere and
/// touches zero at every point.
[[nodiscard]] inline CheckReport check_barabanov(const ControlSet& set, const SphereModel& sphere, int n = 2048,
                                                 double tol_out = 1e-5, double tol_tan = 1e-4) {
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
    CheckReport rep;
    rep.samples = n;
    for (int k = 0; k < n; ++k) {
        const double gamma = sphere.origin() + k * two_pi / n;
        const Vec2 x = sphere.point(gamma);
        const double len = norm(x);
        const Vec2 t_fwd = sphere.tangent(gamma, true), t_back = sphere.tangent(gamma, false);
        const Vec2 n_fwd{t_fwd.x2, -t_fwd.x1}, n_back{-t_back.x2, t_back.x1};
        double here = -std::numeric_limits<double>::infinity();
        for (const Mat2& a : set.centers()) {
            const Vec2 v = a * x;
            here = std::max(here, std::max(dot(n_fwd, v), dot(n_back, v)) / len + set.radius());
        }
        if (set.identity_coefficient()) {
            const double c = *set.identity_coefficient();
            here = std::max(here, c * std::max(dot(n_fwd, x), dot(n_back, x)) / len);
        }
        if (here > rep.worst_outward) {
            rep.worst_outward = here;
            rep.worst_outward_angle = gamma;
        }
        if (-here > rep.worst_tangent_gap) {
            rep.worst_tangent_gap = -here;
            rep.worst_tangent_angle = gamma;
        }
    }
    rep.passed = rep.worst_outward <= tol_out && rep.worst_tangent_gap <= tol_tan;
    return rep;
}

/// Deterministic split of `target` over brackets [m_j, M_j]: each entry starts at
/// the point of its bracket closest to 0, then the remaining surplus or deficit is
/// moved onto the entries in index order.
[[nodiscard]] inline std::vector<double> solve_budget(const std::vector<std::pair<double, double>>& brackets,
                                                      double target) {
    double lo_sum = 0.0, hi_sum = 0.0;
    for (const auto& [m, M] : brackets) {
        if (m > M) throw Error(ErrorCode::BudgetInfeasible, "empty bracket");
        lo_sum += m;
        hi_sum += M;
    }
    const double slack = 1e-12 * std::max(1.0, std::abs(target));
    if (target < lo_sum - slack || target > hi_sum + slack)
        throw Error(ErrorCode::BudgetInfeasible, "target " + std::to_string(target) + " outside [" +
                                                     std::to_string(lo_sum) + ", " + std::to_string(hi_sum) + "]");
    std::vector<double> s;
    double sum = 0.0;
    for (const auto& [m, M] : brackets) {
        s.push_back(std::clamp(0.0, m, M));
        sum += s.back();
    }
    double rest = target - sum;
    for (std::size_t j = 0; j < s.size() && rest != 0.0; ++j) {
        const auto [m, M] = brackets[j];
        const double moved = rest > 0.0 ? std::min(rest, M - s[j]) : std::max(rest, m - s[j]);
        s[j] += moved;
        rest -= moved;
    }
    return s;
}

/// g(end) - g(begin) across an R interval (sine law on the straight stretch) or an
/// H interval (integral of the single trajectory).
[[nodiscard]] inline double delta_of_interval(const IntervalTag& tag, const ControlSet& set,
                                              const IntegrationOptions& opt = {}) {
    switch (tag.kind) {
        case IntervalTag::Kind::R: {
            if (!tag.pencil) throw Error(ErrorCode::WrongTag, "R interval without its pencil");
            const Vec2 l = tag.pencil->image;
            const double c1 = cross(unit_at(tag.begin), l), c2 = cross(unit_at(tag.end), l);
            if (!(c1 * c2 > 0.0))
                throw Error(ErrorCode::InvalidArgument, "image direction falls inside the reverse interval");
            return std::log(c1 / c2);
        }
        case IntervalTag::Kind::H: {
            const SlopeIntegral r = integrate_slope(set, tag.source_end, tag.begin, tag.end, opt);
            if (!r.completed)
                throw Error(ErrorCode::MissingTrajectory, "trajectory does not cross the interval");
            return r.value;
        }
        default: throw Error(ErrorCode::WrongTag, "increments are defined for R and H intervals only");
    }
}

/// Admissible increments g(end) - g(begin) over a P interval: at least the integral of
/// the left slope (the left trajectory into `end` must stay outside at `begin`), at
/// most the integral of the right slope. A side that stops early imposes no bound.
[[nodiscard]] inline std::pair<double, double> bounds_mM(const IntervalTag& tag, const ControlSet& set,
                                                         const IntegrationOptions& opt = {}) {
    const detail::Branch right = detail::trace_branch(set, Side::Right, tag.begin, tag.end, opt);
    const detail::Branch left = detail::trace_branch(set, Side::Left, tag.end, tag.begin, opt);
    if (!detail::leaves_anchor(right) || !detail::leaves_anchor(left))
        throw Error(ErrorCode::MissingTrajectory, "one leading trajectory is missing on the interval");
    const double inf = std::numeric_limits<double>::infinity();
    const double from_left = detail::reaches(left) ? -left.result.value : -inf;
    const double from_right = detail::reaches(right) ? right.result.value : inf;
    return {std::min(from_left, from_right), std::max(from_left, from_right)};
}

namespace detail {

/// Matrices of co(set) that are singular, with kernel line angles in [0, pi).
struct KernelPoint {
    double angle = 0.0;
    std::vector<Mat2> matrices;
};

struct ReverseArc {
    double begin = 0.0, width = 0.0;  ///< line angles: begin in [0, pi), width in (0, pi)
    ReversePencil pencil;
};

inline double line_angle(const Vec2& v) { return normalize_line_angle(angle_of(v)); }

inline bool inside_arc(double angle, const ReverseArc& arc, double eps = 1e-9) {
    double t = std::fmod(angle - arc.begin, pi);
    if (t < 0.0) t += pi;
    return t > eps && t < arc.width - eps;
}

inline void require_sigma_zero(const ControlSet& set, double tol) {
    const double real_sup = real_eigenvalue_sup(set);
    if (real_sup > tol)
        throw Error(ErrorCode::SigmaNotZero, "hull holds a real eigenvalue " + std::to_string(real_sup) + " > 0");
    if (decide_stability(set.shifted(-tol)).stable)
        throw Error(ErrorCode::SigmaNotZero, "set is stable after shifting by " + std::to_string(-tol));
    if (!decide_stability(set.shifted(tol)).stable)
        throw Error(ErrorCode::SigmaNotZero, "set is unstable after shifting by " + std::to_string(tol));
}

inline std::size_t degenerate_count(const ControlSet& set) {
    if (set.kind() == ControlSet::Kind::FrobeniusBall) return ball_degenerate(set.center(), set.radius()).matrix ? 1 : 0;
    if (set.kind() != ControlSet::Kind::Finite) return 2;
    const auto list = degenerate_in_hull(set);
    for (const auto& d : list)
        if (d.provenance == DegenerateProvenance::PencilInterior) return std::numeric_limits<std::size_t>::max();
    return list.size();
}

}  // namespace detail

/// Uniqueness of the invariant sphere given the P brackets and the budget they share.
[[nodiscard]] inline UniquenessReport classify_uniqueness(const ControlSet& set,
                                                          const std::vector<IntervalTag>& partition, double target) {
    UniquenessReport r;
    r.unique = true;
    if (detail::degenerate_count(set) <= 1) {
        r.reason = UniquenessReport::Reason::AtMostOneDegenerate;
        return r;
    }
    std::vector<const IntervalTag*> ps;
    for (const auto& t : partition)
        if (t.kind == IntervalTag::Kind::P) ps.push_back(&t);
    if (ps.size() <= 1) {
        r.reason = UniquenessReport::Reason::SingletonP;
        return r;
    }
    double lo = 0.0, hi = 0.0;
    for (const auto* t : ps) {
        lo += t->m;
        hi += t->M;
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(target));
    if ((std::isfinite(lo) && std::abs(target - lo) <= tol) || (std::isfinite(hi) && std::abs(target - hi) <= tol)) {
        r.reason = UniquenessReport::Reason::BoundaryBudget;
        return r;
    }
    r.unique = false;
    r.reason = UniquenessReport::Reason::InfinitelyMany;
    for (const auto* t : ps) {
        std::ostringstream os;
        os << "P(" << t->begin << ", " << t->end << "): " << t->m << " <= s = " << t->s << " <= " << t->M;
        r.slack.push_back(os.str());
    }
    return r;
}

class SphereAssembler {
public:
    SphereAssembler(const ControlSet& set, const BuildOptions& opt) : set_(set), opt_(opt) {}

    SphereModel ellipse(const Mat2& m) {
        SphereModel s = SphereModel::ellipse((1.0 / m.a11) * m);
        s.uniqueness_ = classify_uniqueness(set_, {}, 0.0);
        return s;
    }

    SphereModel periodic() {
        SphereModel s;
        s.kind_ = SphereModel::Kind::Periodic;
        s.set_ = std::make_shared<const ControlSet>(set_);
        s.integration_ = opt_.integration;
        std::optional<detail::Branch> best;
        for (Side side : {Side::Left, Side::Right}) {
            detail::Branch b = detail::trace_branch(set_, side, 0.0, side == Side::Left ? pi : -pi, opt_.integration);
            if (!b.result.completed) continue;
            if (!best || std::abs(b.result.value) < std::abs(best->result.value)) best = std::move(b);
        }
        if (!best) throw Error(ErrorCode::MissingTrajectory, "no round leading trajectory to close the sphere");
        s.closure_ = best->result.value;
        if (std::abs(s.closure_) > opt_.closure_tol)
            throw Error(ErrorCode::ClosureViolation, "periodic trajectory misses closure by " + std::to_string(s.closure_));
        s.origin_ = best->lo;
        // Shift so that ln r(0) = 0 whichever end the trajectory started from.
        best->offset = -best->eval(set_, 0.0, opt_.integration);
        s.pieces_.push_back({best->lo, best->hi, 0, {}, {}});
        s.branches_.push_back(std::move(*best));
        s.uniqueness_ = classify_uniqueness(set_, {}, 0.0);
        return s;
    }

    /// Partition of [origin, origin + pi] with brackets, increments, and branches traced
    /// with g = 0 at their anchors.
    std::vector<IntervalTag> partition() {
        std::vector<detail::KernelPoint> kernels;
        std::vector<detail::ReverseArc> arcs;
        auto add_kernel = [&](const Vec2& k, const Mat2& m) {
            const double a = detail::line_angle(k);
            for (auto& kp : kernels)
                if (std::abs(std::remainder(kp.angle - a, pi)) < 1e-9) {
                    kp.matrices.push_back(m);
                    return;
                }
            kernels.push_back({a, {m}});
        };
        if (set_.kind() == ControlSet::Kind::Finite) {
            for (const auto& d : degenerate_in_hull(set_))
                if (d.provenance != DegenerateProvenance::PencilInterior) add_kernel(d.kernel, d.matrix);
            for (const auto& p : reverse_pencils(set_)) {
                const double a1 = detail::line_angle(p.kernel1), a2 = detail::line_angle(p.kernel2);
                const double mid = detail::line_angle(kernel_direction(0.5 * (p.a1 + p.a2)));
                const double lo = std::min(a1, a2), hi = std::max(a1, a2);
                detail::ReverseArc arc{lo, hi - lo, p};
                if (!(mid > lo && mid < hi)) arc = {hi, lo + pi - hi, p};
                arcs.push_back(arc);
            }
        } else if (set_.kind() == ControlSet::Kind::FrobeniusBall) {
            const auto d = ball_degenerate(set_.center(), set_.radius());
            if (d.matrix) add_kernel(kernel_direction(*d.matrix), *d.matrix);
        }
        std::erase_if(kernels, [&](const detail::KernelPoint& kp) {
            return std::any_of(arcs.begin(), arcs.end(), [&](const auto& arc) { return detail::inside_arc(kp.angle, arc); });
        });
        if (kernels.empty()) throw Error(ErrorCode::NotDegenerate, "no singular matrix pins the partition");
        std::sort(kernels.begin(), kernels.end(), [](const auto& a, const auto& b) { return a.angle < b.angle; });
        origin_ = kernels.front().angle;

        std::vector<IntervalTag> tags;
        const std::size_t n = kernels.size();
        for (std::size_t i = 0; i < n; ++i) {
            IntervalTag d;
            d.kind = IntervalTag::Kind::D;
            d.begin = d.end = kernels[i].angle;
            d.kernel_matrices = kernels[i].matrices;
            tags.push_back(d);
            const double p = kernels[i].angle;
            const double q = i + 1 < n ? kernels[i + 1].angle : origin_ + pi;
            IntervalTag t;
            t.begin = p;
            t.end = q;
            const auto arc = std::find_if(arcs.begin(), arcs.end(), [&](const auto& a) {
                return std::abs(std::remainder(a.begin - p, pi)) < 1e-9 && std::abs(a.width - (q - p)) < 1e-9;
            });
            if (arc != arcs.end()) {
                t.kind = IntervalTag::Kind::R;
                t.pencil = arc->pencil;
                t.delta = delta_of_interval(t, set_);
                branches_.push_back({});
                branches_.push_back({});
            } else {
                classify_free(t);
            }
            tags.push_back(t);
        }
        return tags;
    }

    SphereModel partitioned(const std::optional<std::vector<double>>& choice) {
        std::vector<IntervalTag> tags = partition();
        double fixed = 0.0;
        std::vector<std::pair<double, double>> brackets;
        std::vector<IntervalTag*> ps;
        for (auto& t : tags) {
            if (t.kind == IntervalTag::Kind::R || t.kind == IntervalTag::Kind::H) fixed += t.delta;
            if (t.kind == IntervalTag::Kind::P) {
                brackets.emplace_back(t.m, t.M);
                ps.push_back(&t);
            }
        }
        const double target = -fixed;
        double closure = fixed;
        if (!ps.empty()) {
            std::vector<double> s;
            if (choice) {
                if (choice->size() != ps.size())
                    throw Error(ErrorCode::ChoiceOutOfBracket, "expected " + std::to_string(ps.size()) + " increments");
                double sum = 0.0;
                for (std::size_t j = 0; j < ps.size(); ++j) {
                    const double v = (*choice)[j];
                    if (!(v >= brackets[j].first - 1e-12 && v <= brackets[j].second + 1e-12))
                        throw Error(ErrorCode::ChoiceOutOfBracket,
                                    "increment " + std::to_string(v) + " outside [" + std::to_string(brackets[j].first) +
                                        ", " + std::to_string(brackets[j].second) + "]");
                    sum += v;
                }
                if (std::abs(sum - target) > opt_.closure_tol)
                    throw Error(ErrorCode::ChoiceOutOfBracket, "increments sum to " + std::to_string(sum) +
                                                                   " instead of " + std::to_string(target));
                s = *choice;
            } else {
                s = solve_budget(brackets, target);
            }
            for (std::size_t j = 0; j < ps.size(); ++j) {
                ps[j]->s = s[j];
                ps[j]->delta = s[j];
                closure += s[j];
            }
        } else if (std::abs(closure) > opt_.closure_tol) {
            throw Error(ErrorCode::ClosureViolation, "increments around the half-turn sum to " + std::to_string(closure));
        }

        SphereModel model;
        model.kind_ = SphereModel::Kind::Partitioned;
        model.origin_ = origin_;
        model.closure_ = closure;
        model.set_ = std::make_shared<const ControlSet>(set_);
        model.integration_ = opt_.integration;
        double g = 0.0;
        std::size_t slot = 0;
        for (const IntervalTag& t : tags) {
            if (t.kind == IntervalTag::Kind::D) continue;
            detail::Branch& right = branches_[slot];
            detail::Branch& left = branches_[slot + 1];
            slot += 2;
            const double g_end = g + t.delta;
            switch (t.kind) {
                case IntervalTag::Kind::R: {
                    const Vec2 anchor = std::exp(g) * unit_at(t.begin);
                    model.pieces_.push_back({t.begin, t.end, -1, anchor, t.pencil->image});
                    break;
                }
                case IntervalTag::Kind::H: {
                    detail::Branch& b = t.source_end == Side::Right ? right : left;
                    b.offset = t.source_end == Side::Right ? g : g_end;
                    model.pieces_.push_back({t.begin, t.end, static_cast<int>(model.branches_.size()), {}, {}});
                    model.branches_.push_back(b);
                    break;
                }
                case IntervalTag::Kind::P: {
                    right.offset = g;
                    left.offset = g_end;
                    const double meet = meeting_point(right, left, t);
                    model.meets_.push_back(meet);
                    const int ri = static_cast<int>(model.branches_.size());
                    model.branches_.push_back(right);
                    model.branches_.push_back(left);
                    if (meet > t.begin) model.pieces_.push_back({t.begin, meet, ri, {}, {}});
                    if (meet < t.end) model.pieces_.push_back({meet, t.end, ri + 1, {}, {}});
                    break;
                }
                default: break;
            }
            g = g_end;
        }
        model.uniqueness_ = classify_uniqueness(set_, tags, target);
        model.partition_ = std::move(tags);
        return model;
    }

private:
    /// H or P classification of a kernel-free interval from the two leading trajectories
    /// anchored at its ends: right from `begin`, left from `end`.
    void classify_free(IntervalTag& t) {
        detail::Branch right = detail::trace_branch(set_, Side::Right, t.begin, t.end, opt_.integration);
        detail::Branch left = detail::trace_branch(set_, Side::Left, t.end, t.begin, opt_.integration);
        const bool has_right = detail::leaves_anchor(right), has_left = detail::leaves_anchor(left);
        const double inf = std::numeric_limits<double>::infinity();
        if (has_right && has_left) {
            t.kind = IntervalTag::Kind::P;
            const double from_left = detail::reaches(left) ? -left.result.value : -inf;
            const double from_right = detail::reaches(right) ? right.result.value : inf;
            t.m = std::min(from_left, from_right);
            t.M = std::max(from_left, from_right);
            if (from_left > from_right)
                log(LogLevel::Warn, "left bound exceeds right bound on a free interval; using the ordered bracket");
        } else if (has_right && right.result.completed) {
            t.kind = IntervalTag::Kind::H;
            t.source_end = Side::Right;
            t.delta = right.result.value;
        } else if (has_left && left.result.completed) {
            t.kind = IntervalTag::Kind::H;
            t.source_end = Side::Left;
            t.delta = -left.result.value;
        } else {
            throw Error(ErrorCode::MissingTrajectory, "no leading trajectory spans (" + std::to_string(t.begin) + ", " +
                                                          std::to_string(t.end) + ")");
        }
        branches_.push_back(std::move(right));
        branches_.push_back(std::move(left));
    }

    /// Angle where the right trajectory (active near `begin`) hands over to the left one.
    double meeting_point(const detail::Branch& right, const detail::Branch& left, const IntervalTag& t) const {
        const double lo = std::max(t.begin, left.lo), hi = std::min(t.end, right.hi);
        if (lo > hi) throw Error(ErrorCode::MissingTrajectory, "leading trajectories leave a gap on a free interval");
        auto gap = [&](double gamma) {
            return right.eval(set_, gamma, opt_.integration) - left.eval(set_, gamma, opt_.integration);
        };
        constexpr int grid = 64;
        double prev = lo;
        for (int k = 1; k <= grid; ++k) {
            const double at = k == grid ? hi : lo + (hi - lo) * k / grid;
            const double d = gap(k == grid ? hi - 1e-13 * (hi - lo) : at);
            if (d >= 0.0) {
                double a = prev, b = at;
                for (int it = 0; it < 200 && b - a > 1e-15 * std::max(1.0, std::abs(b)); ++it) {
                    const double mid = 0.5 * (a + b);
                    const double dm = gap(mid);
                    if (std::abs(dm) <= opt_.meet_tolerance) return mid;
                    if (dm >= 0.0) b = mid;
                    else a = mid;
                }
                return 0.5 * (a + b);
            }
            prev = at;
        }
        return hi;
    }

    const ControlSet& set_;
    BuildOptions opt_;
    double origin_ = 0.0;
    std::vector<detail::Branch> branches_;  ///< right and left branch per non-D interval
};

/// Partition of the half-sphere of a set with exponent zero and real dominance.
[[nodiscard]] inline std::vector<IntervalTag> build_partition(const ControlSet& set, const BuildOptions& opt = {}) {
    if (complex_dominance(set, 0.0, opt.sigma_tol).kind == DominanceCertificate::Kind::Complex)
        throw Error(ErrorCode::ComplexDominant, "the invariant ellipse is the sphere; no partition needed");
    detail::require_sigma_zero(set, opt.sigma_tol);
    SphereAssembler a(set, opt);
    return a.partition();
}

/// Invariant sphere of a set with exponent zero. Complex dominance gives the
/// ellipse, a hull without singular matrices gives the periodic leading trajectory,
/// and otherwise the sphere is assembled over the partition with increments `choice`
/// on the P intervals (water-filled when absent).
[[nodiscard]] inline SphereModel assemble_sphere(const ControlSet& set,
                                                 const std::optional<std::vector<double>>& choice = std::nullopt,
                                                 const BuildOptions& opt = {}) {
    const auto cert = complex_dominance(set, 0.0, opt.sigma_tol);
    SphereAssembler a(set, opt);
    if (cert.kind == DominanceCertificate::Kind::Complex) return a.ellipse(cert.ellipse);
    detail::require_sigma_zero(set, opt.sigma_tol);
    const double real_sup = real_eigenvalue_sup(set);
    if (!std::isfinite(real_sup) || real_sup < -opt.sigma_tol) return a.periodic();
    if (set.kind() == ControlSet::Kind::NoisySum)
        throw Error(ErrorCode::Unsupported, "noisy sets with a singular member at the exponent");
    return a.partitioned(choice);
}

struct BarabanovResult {
    double sigma = 0.0;
    LyapunovResult exponent;
    SphereModel sphere;
    int refinements = 0;
};

/// Exponent, shift, and sphere in one pass; one retry with a tenfold tighter exponent
/// if the sphere fails to close.
[[nodiscard]] inline BarabanovResult barabanov_norm(const ControlSet& set, double tol = 1e-9,
                                                    const std::optional<std::vector<double>>& choice = std::nullopt,
                                                    BuildOptions opt = {}) {
    opt.sigma_tol = std::max(opt.sigma_tol, 10.0 * tol);
    BarabanovResult res;
    for (int attempt = 0;; ++attempt) {
        const double t = attempt == 0 ? tol : tol / 10.0;
        res.exponent = lyapunov_exponent(set, t);
        res.sigma = res.exponent.sigma;
        try {
            res.sphere = assemble_sphere(set.shifted(res.sigma), choice, opt);
            return res;
        } catch (const Error& e) {
            const bool retry = e.code() == ErrorCode::ClosureViolation || e.code() == ErrorCode::BudgetInfeasible;
            if (!retry || attempt > 0) throw;
            log(LogLevel::Info, std::string("refining the exponent after: ") + e.what());
            ++res.refinements;
        }
    }
}

}  // namespace pswitch
