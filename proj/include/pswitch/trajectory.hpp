#pragma once

#include "control_set.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "log.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

namespace pswitch {

struct IntegrationOptions {
    double tolerance = 1e-10;       ///< absolute quadrature error allowed per radian of travel
    double max_panel = pi / 180.0;  ///< longest angular panel between recorded samples
    int max_depth = 24;             ///< bisection depth of the adaptive quadrature
};

struct PolarSample {
    double gamma = 0.0;
    double g = 0.0;  ///< ln |x(gamma)|
};

struct SwitchEvent {
    double gamma = 0.0;
    int generator = -1;  ///< index into ControlSet::centers(), -1 for a ball tangent
};

struct PolarTrajectory {
    Side side = Side::Left;
    std::vector<PolarSample> samples;
    std::vector<SwitchEvent> switch_log;
};

struct RoundOutcome {
    enum class Kind { Round, Stopped, Asymptotic };
    Kind kind = Kind::Round;
    double lambda = std::numeric_limits<double>::quiet_NaN();  ///< Round only
    double angle = 0.0;  ///< end angle (Round), stopping angle (Stopped), limit direction (Asymptotic)
    double error = 0.0;  ///< estimated absolute error of lambda
};

[[nodiscard]] constexpr std::string_view to_string(RoundOutcome::Kind k) noexcept {
    switch (k) {
        case RoundOutcome::Kind::Round: return "round";
        case RoundOutcome::Kind::Stopped: return "stopped";
        case RoundOutcome::Kind::Asymptotic: return "asymptotic";
    }
    return "unknown";
}

struct TrajectoryResult {
    PolarTrajectory trajectory;
    RoundOutcome outcome;
};

/// Slope dg/dgamma of the leading trajectory at polar angle gamma, i.e. the cotangent
/// of the leading angle, or nothing where the leading direction does not exist.
[[nodiscard]] inline std::optional<double> leading_slope(const ControlSet& set, double gamma, Side side) {
    const Vec2 x = unit_at(gamma);
    const LeadingDirection d = detail::leading_unchecked(set, x, side);
    if (!d.defined) return std::nullopt;
    return dot(x, d.image) / cross(x, d.image);
}

/// Polar angles in [0, 2pi) where the active generator of a finite set can change:
/// directions where two images are collinear or an image is collinear with x.
[[nodiscard]] inline std::vector<double> switching_directions(const ControlSet& set) {
    std::vector<double> out;
    if (set.radius() > 0.0) return out;
    const auto& g = set.centers();
    auto add = [&](const QuadraticForm& q) {
        for (double a : null_directions(q.a, q.b, q.d)) {
            out.push_back(a);
            out.push_back(a + pi);
        }
    };
    for (std::size_t i = 0; i < g.size(); ++i) {
        add(cross_form(Mat2::identity(), g[i]));
        for (std::size_t j = i + 1; j < g.size(); ++j) add(cross_form(g[i], g[j]));
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end(), [](double a, double b) { return std::abs(a - b) < 1e-14; }),
              out.end());
    return out;
}

/// Result of integrating the leading slope from one angle towards another.
struct SlopeIntegral {
    double value = 0.0;  ///< integral from `from` to the reached angle (signed by direction); +-inf if divergent
    double error = 0.0;
    bool completed = true;  ///< reached `to` without the leading direction ceasing to exist
    bool divergent = false;
    double reached = 0.0;   ///< `to`, or the angle where the leading direction ceased to exist
};

namespace detail {

template <class F>
double adaptive_gk(const F& f, double a, double b, double tol_per_unit, int depth, double& err_sum,
                   double rel_floor = 1e-13) {
    double err = 0.0, l1 = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, &err, &l1);
    err *= 0.5 * (b - a);  // the non-adaptive estimate is reported on the reference interval [-1, 1]
    if (!(err > tol_per_unit * (b - a)) || err <= rel_floor * l1 || depth <= 0 || b - a < 1e-14) {
        err_sum += std::isfinite(err) ? err : 0.0;
        return v;
    }
    const double m = 0.5 * (a + b);
    return adaptive_gk(f, a, m, tol_per_unit, depth - 1, err_sum, rel_floor) +
           adaptive_gk(f, m, b, tol_per_unit, depth - 1, err_sum, rel_floor);
}

/// Oriented integral of the slope from p to q, assuming the leading direction exists in between.
inline double panel_integral(const ControlSet& set, Side side, double p, double q, const IntegrationOptions& opt,
                             double& err_sum, double rel_floor = 1e-13) {
    auto f = [&](double gamma) {
        const auto s = leading_slope(set, gamma, side);
        return s ? *s : 0.0;
    };
    const double a = std::min(p, q), b = std::max(p, q);
    const double v = adaptive_gk(f, a, b, opt.tolerance, opt.max_depth, err_sum, rel_floor);
    return q >= p ? v : -v;
}

/// Boundary of the region where the leading direction exists, between a defined
/// angle `good` and an undefined angle `bad`.
inline double existence_boundary(const ControlSet& set, Side side, double good, double bad) {
    for (int it = 0; it < 200 && std::abs(bad - good) > 1e-15 * std::max(1.0, std::abs(good)); ++it) {
        const double mid = 0.5 * (good + bad);
        if (leading_slope(set, mid, side)) good = mid;
        else bad = mid;
    }
    return bad;
}

/// Integral from p towards the boundary angle `stop` where the leading direction
/// ceases to exist, decade by decade. Increments that fail to decay mean divergence.
/// Near a pole the slope itself carries roundoff proportional to its size, so these
/// panels use a relative accuracy floor.
inline SlopeIntegral tail_integral(const ControlSet& set, Side side, double p, double stop, const IntegrationOptions& opt) {
    SlopeIntegral out;
    out.completed = false;
    out.reached = stop;
    const double len = std::abs(stop - p);
    const double dir = stop >= p ? 1.0 : -1.0;
    const double floor = 1e-13 * std::max(1.0, std::abs(stop));
    if (len <= floor) return out;
    IntegrationOptions tail_opt = opt;
    tail_opt.max_depth = std::min(opt.max_depth, 12);
    double prev_point = p;
    double scale = 0.1;
    std::vector<double> increments;
    while (len * scale >= floor) {
        const double point = stop - dir * len * scale;
        double err = 0.0;
        const double inc = panel_integral(set, side, prev_point, point, tail_opt, err, 1e-9);
        out.value += inc;
        out.error += err;
        increments.push_back(inc);
        prev_point = point;
        scale *= 0.1;
    }
    if (increments.size() >= 3) {
        const double last = increments.back(), before = increments[increments.size() - 2];
        const bool sustained = std::abs(last) > 1e-8 && std::abs(last) > 0.5 * std::abs(before) &&
                               std::signbit(last) == std::signbit(before);
        if (sustained) {
            out.divergent = true;
            out.value = std::copysign(std::numeric_limits<double>::infinity(), last);
        }
    }
    return out;
}

inline std::vector<double> panel_nodes(double from, double to, const IntegrationOptions& opt,
                                       const std::vector<double>* breaks) {
    std::vector<double> cuts{from};
    const double lo = std::min(from, to), hi = std::max(from, to);
    if (breaks && !breaks->empty()) {
        const double base = std::floor(lo / two_pi) * two_pi;
        std::vector<double> inner;
        for (double shift = base; shift <= hi; shift += two_pi)
            for (double b : *breaks) {
                const double a = b + shift;
                if (a > lo + 1e-13 && a < hi - 1e-13) inner.push_back(a);
            }
        std::sort(inner.begin(), inner.end());
        if (to < from) std::reverse(inner.begin(), inner.end());
        cuts.insert(cuts.end(), inner.begin(), inner.end());
    }
    cuts.push_back(to);
    std::vector<double> nodes{from};
    for (std::size_t k = 1; k < cuts.size(); ++k) {
        const double gap = cuts[k] - cuts[k - 1];
        const int pieces = std::max(1, static_cast<int>(std::ceil(std::abs(gap) / opt.max_panel - 1e-9)));
        for (int m = 1; m < pieces; ++m) nodes.push_back(cuts[k - 1] + gap * m / pieces);
        nodes.push_back(cuts[k]);
    }
    return nodes;
}

/// Whether the generator leading just inside the panel from `inside` to `at` maps
/// the direction at `at` onto its own line.
inline bool radial_at(const ControlSet& set, Side side, double at, double inside) {
    if (set.radius() > 0.0) return false;
    const int gen = leading_unchecked(set, unit_at(at + (inside - at) * 1e-9), side).generator;
    if (gen < 0) return false;
    const Vec2 x = unit_at(at);
    const Vec2 image = set.centers()[static_cast<std::size_t>(gen)] * x;
    const double size = norm(image);
    return size > 0.0 && std::abs(cross(x, image)) <= 1e-9 * size;
}

inline int active_generator(const ControlSet& set, double gamma, Side side) {
    return leading_unchecked(set, unit_at(gamma), side).generator;
}

}  // namespace detail

inline constexpr double start_probes[] = {0.0, 1e-13, 1e-11, 1e-9, 1e-7, 1e-6};

/// Integrates the leading slope from `from` to `to` (either direction), calling
/// `on_sample(gamma, integral_so_far)` at every panel end.
inline SlopeIntegral integrate_slope(const ControlSet& set, Side side, double from, double to,
                                     const IntegrationOptions& opt = {},
                                     const std::function<void(double, double, int)>& on_sample = {}) {
    const std::vector<double> breaks = switching_directions(set);
    const std::vector<double> nodes = detail::panel_nodes(from, to, opt, &breaks);
    SlopeIntegral out;
    out.reached = to;
    // On a kernel direction of a ball member the image disc touches the origin; the
    // direction becomes defined only a little way off it.
    const double step = to >= from ? 1.0 : -1.0;
    const bool no_start = std::none_of(std::begin(start_probes), std::end(start_probes), [&](double h) {
        return std::abs(h) < std::abs(to - from) && leading_slope(set, from + step * h, side).has_value();
    });
    if (no_start || (nodes.size() > 1 && detail::radial_at(set, side, from, nodes[1]))) {
        out.completed = false;
        out.reached = from;
        return out;
    }
    for (std::size_t k = 1; k < nodes.size(); ++k) {
        const double p = nodes[k - 1], q = nodes[k];
        const double mid = 0.5 * (p + q);
        std::optional<double> bad;
        bool pole = false;
        if (!leading_slope(set, mid, side)) bad = mid;
        else if (pole = detail::radial_at(set, side, q, p); pole || !leading_slope(set, q, side)) bad = q;
        if (bad) {
            // A breakpoint where an inactive generator momentarily aligns with -x is not a
            // boundary if the leading direction exists just past it.
            const bool isolated = !pole && *bad == q && leading_slope(set, q + (q - p) * 1e-9, side).has_value();
            if (!isolated) {
                const double stop = pole ? q : detail::existence_boundary(set, side, p, *bad);
                SlopeIntegral tail = detail::tail_integral(set, side, p, stop, opt);
                out.value += tail.value;
                out.error += tail.error;
                out.completed = false;
                out.divergent = tail.divergent;
                out.reached = stop;
                if (on_sample && !out.divergent) on_sample(stop, out.value, detail::active_generator(set, 0.5 * (p + stop), side));
                return out;
            }
        }
        double err = 0.0;
        out.value += detail::panel_integral(set, side, p, q, opt, err);
        out.error += err;
        if (on_sample) on_sample(q, out.value, detail::active_generator(set, mid, side));
    }
    return out;
}

/// Integrates the leading trajectory through `start` on the given side over an
/// angular span (at most pi), classifying the outcome.
[[nodiscard]] inline TrajectoryResult integrate_leading(const ControlSet& set, const Vec2& start, Side side,
                                                        double span = pi, const IntegrationOptions& opt = {}) {
    if (start.x1 == 0.0 && start.x2 == 0.0) throw Error(ErrorCode::ZeroVector, "trajectory start is the origin");
    if (!(span > 0.0) || span > pi + 1e-12) throw Error(ErrorCode::InvalidArgument, "angular span must lie in (0, pi]");
    if (!is_feasible(set, start))
        throw Error(ErrorCode::Infeasible, "trajectory start " + to_string(start) + " is not feasible");
    const double g0 = std::log(norm(start));
    const double gamma0 = std::atan2(start.x2, start.x1);
    const double dir = side == Side::Left ? 1.0 : -1.0;
    const double gamma_end = gamma0 + dir * span;

    TrajectoryResult res;
    res.trajectory.side = side;
    res.trajectory.samples.push_back({gamma0, g0});
    int current = -2;
    auto record = [&](double gamma, double integral, int generator) {
        res.trajectory.samples.push_back({gamma, g0 + integral});
        if (generator != current) {
            const double at = res.trajectory.samples[res.trajectory.samples.size() - 2].gamma;
            res.trajectory.switch_log.push_back({at, generator});
            current = generator;
        }
    };
    const SlopeIntegral s = integrate_slope(set, side, gamma0, gamma_end, opt, record);
    if (s.completed) {
        res.outcome.kind = RoundOutcome::Kind::Round;
        res.outcome.lambda = std::exp(s.value);
        res.outcome.error = res.outcome.lambda * s.error;
        res.outcome.angle = gamma_end;
    } else {
        res.outcome.kind = s.divergent ? RoundOutcome::Kind::Asymptotic : RoundOutcome::Kind::Stopped;
        res.outcome.angle = s.reached;
        res.outcome.error = s.error;
    }
    log(LogLevel::Debug, std::string("leading ") + std::string(to_string(side)) + " trajectory: " +
                             std::string(to_string(res.outcome.kind)) + " at angle " + std::to_string(res.outcome.angle));
    return res;
}

/// A pair of generators whose images at `point` lie on one ray: A_i x = lambda A_j x.
/// lambda = +inf encodes A_j x = 0. `whole_plane` flags a pencil that is singular on
/// every direction at this lambda (or for every lambda).
struct SwitchingPoint {
    int i = 0, j = 0;
    double lambda = 0.0;
    Vec2 point{};
    bool whole_plane = false;
};

[[nodiscard]] inline std::vector<SwitchingPoint> switching_points_finite(const ControlSet& set) {
    if (set.radius() != 0.0) throw Error(ErrorCode::WrongTag, "switching points need a finite control set");
    const auto& g = set.centers();
    std::vector<SwitchingPoint> out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        for (std::size_t j = i + 1; j < g.size(); ++j) {
            const Mat2& a = g[i];
            const Mat2& b = g[j];
            // det(a - lambda b) = c0 - c1 lambda + c2 lambda^2
            const double c0 = det(a), c2 = det(b);
            const double c1 = a.a11 * b.a22 + a.a22 * b.a11 - a.a12 * b.a21 - a.a21 * b.a12;
            const double scale = std::pow(frobenius_norm(a) + frobenius_norm(b), 2);
            const double tiny = det_tolerance * scale;
            const int ii = static_cast<int>(i), jj = static_cast<int>(j);
            if (std::abs(c0) <= tiny && std::abs(c1) <= tiny && std::abs(c2) <= tiny) {
                out.push_back({ii, jj, std::numeric_limits<double>::quiet_NaN(), {1.0, 0.0}, true});
                continue;
            }
            std::vector<double> roots;
            if (std::abs(c2) <= tiny) {
                if (std::abs(c1) > tiny) roots.push_back(c0 / c1);
                roots.push_back(std::numeric_limits<double>::infinity());
            } else {
                double disc = c1 * c1 - 4.0 * c2 * c0;
                if (disc < 0.0 && disc > -1e-10 * (c1 * c1 + std::abs(4.0 * c2 * c0))) disc = 0.0;
                if (disc >= 0.0) {
                    const double r = std::sqrt(disc);
                    const double q = 0.5 * (c1 + (c1 >= 0.0 ? r : -r));
                    if (q != 0.0) {
                        roots.push_back(q / c2);
                        roots.push_back(c0 / q);
                    } else {
                        roots.push_back(0.0);
                    }
                }
            }
            std::sort(roots.begin(), roots.end());
            roots.erase(std::unique(roots.begin(), roots.end(),
                                    [](double x, double y) { return std::abs(x - y) <= 1e-9 * std::max(1.0, std::abs(x)); }),
                        roots.end());
            for (double lambda : roots) {
                if (lambda < 0.0) {
                    if (lambda < -1e-12) continue;
                    lambda = 0.0;
                }
                const Mat2 m = std::isinf(lambda) ? b : a - lambda * b;
                SwitchingPoint sp{ii, jj, lambda, {1.0, 0.0}, false};
                if (frobenius_norm(m) <= 1e-12 * std::sqrt(scale)) sp.whole_plane = true;
                else sp.point = detail::dominant_row_kernel(m);
                out.push_back(sp);
            }
        }
    }
    return out;
}

}  // namespace pswitch
