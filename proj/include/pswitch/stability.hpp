#pragma once

#include <pswitch/control_set.hpp>
#include <pswitch/errors.hpp>
#include <pswitch/linalg.hpp>
#include <pswitch/log.hpp>
#include <pswitch/trajectory.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pswitch {

struct StabilityVerdict {
    enum class Reason { NonnegEigenvalueInHull, IncreasingRound, AllRoundsDecreasing };
    bool stable = false;
    Reason reason = Reason::AllRoundsDecreasing;
    std::optional<EigenWitness> witness;  ///< NonnegEigenvalueInHull
    Side side = Side::Left;               ///< IncreasingRound
    double lambda = std::numeric_limits<double>::quiet_NaN();
    std::optional<RoundOutcome> left, right;  ///< empty when the hull check rejected first
};

[[nodiscard]] constexpr std::string_view to_string(StabilityVerdict::Reason r) noexcept {
    switch (r) {
        case StabilityVerdict::Reason::NonnegEigenvalueInHull: return "nonnegative-eigenvalue-in-hull";
        case StabilityVerdict::Reason::IncreasingRound: return "increasing-round";
        case StabilityVerdict::Reason::AllRoundsDecreasing: return "all-rounds-decreasing";
    }
    return "unknown";
}

/// Asymptotic stability of the switching system: no matrix of the hull may have a
/// nonnegative real eigenvalue, and each round leading trajectory from (1, 0) must
/// shrink. A side that stops or runs off to infinity imposes nothing.
[[nodiscard]] inline StabilityVerdict decide_stability(const ControlSet& set, const IntegrationOptions& opt = {}) {
    StabilityVerdict v;
    if (auto w = nonneg_eigenvalue_witness(set)) {
        v.reason = StabilityVerdict::Reason::NonnegEigenvalueInHull;
        v.witness = w;
        v.lambda = w->eigenvalue;
        return v;
    }
    const Vec2 start{1.0, 0.0};
    v.left = integrate_leading(set, start, Side::Left, pi, opt).outcome;
    v.right = integrate_leading(set, start, Side::Right, pi, opt).outcome;
    for (Side side : {Side::Left, Side::Right}) {
        const RoundOutcome& o = side == Side::Left ? *v.left : *v.right;
        if (o.kind == RoundOutcome::Kind::Round && o.lambda >= 1.0) {
            v.reason = StabilityVerdict::Reason::IncreasingRound;
            v.side = side;
            v.lambda = o.lambda;
            return v;
        }
    }
    v.stable = true;
    v.reason = StabilityVerdict::Reason::AllRoundsDecreasing;
    return v;
}

/// Supremum of the real eigenvalues over co(set), or -inf when every matrix of the
/// hull has a complex spectrum. Bisection on the shift, since the hull of set - aI
/// holds a nonnegative eigenvalue exactly for a up to this value.
[[nodiscard]] inline double real_eigenvalue_sup(const ControlSet& set) {
    double scale = 0.0;
    for (const Mat2& m : set.centers()) scale = std::max(scale, frobenius_norm(m));
    if (set.identity_coefficient()) scale = std::max(scale, std::abs(*set.identity_coefficient()));
    scale += set.radius() + 1.0;
    double lo = -scale, hi = scale;
    if (!nonneg_eigenvalue_witness(set.shifted(lo))) return -std::numeric_limits<double>::infinity();
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (nonneg_eigenvalue_witness(set.shifted(mid))) lo = mid;
        else hi = mid;
    }
    return lo;
}

struct DominanceCertificate {
    enum class Kind { None, Complex, Real };
    Kind kind = Kind::None;
    Mat2 matrix{};   ///< Complex: the generator whose cycles are extremal
    Mat2 ellipse{};  ///< Complex: positive-definite M with A^T M + M A <= 2 sigma M
    std::vector<Mat2> degenerate;  ///< Real: singular matrices of co(set - sigma I)
};

[[nodiscard]] constexpr std::string_view to_string(DominanceCertificate::Kind k) noexcept {
    switch (k) {
        case DominanceCertificate::Kind::None: return "none";
        case DominanceCertificate::Kind::Complex: return "complex";
        case DominanceCertificate::Kind::Real: return "real";
    }
    return "unknown";
}

namespace detail {

/// Positive-definite M with B^T M + M B = 0 for a traceless B with complex spectrum.
inline Mat2 invariant_ellipse(const Mat2& traceless) {
    const double p = traceless.a11, q = traceless.a12, r = traceless.a21;
    Mat2 m{-r, p, p, q};
    if (m.a11 < 0.0) m = -m;
    return m;
}

inline double spectral_norm_symmetric(const Mat2& m) {
    const double mid = 0.5 * (m.a11 + m.a22);
    const double rad = std::hypot(0.5 * (m.a11 - m.a22), m.a12);
    return std::abs(mid) + rad;
}

/// Largest eigenvalue of A^T M + M A - 2 s M over the set; balls add the worst
/// perturbation 2 |M|_2 r.
inline double lmi_violation(const ControlSet& set, const Mat2& ellipse, double s) {
    double worst = -std::numeric_limits<double>::infinity();
    const double margin = 2.0 * spectral_norm_symmetric(ellipse) * set.radius();
    for (const Mat2& a : set.centers()) {
        const Mat2 form = transpose(a) * ellipse + ellipse * a - 2.0 * s * ellipse;
        worst = std::max(worst, max_eigenvalue_symmetric(form) + margin);
    }
    if (set.identity_coefficient()) {
        const double c = *set.identity_coefficient();
        worst = std::max(worst, 2.0 * (c - s) * std::max(ellipse.a11, ellipse.a22));
    }
    return worst;
}

}  // namespace detail

/// Complex certificate: a generator with complex spectrum and abscissa sigma whose
/// invariant ellipse is non-expanding for the whole set after the shift.
[[nodiscard]] inline DominanceCertificate complex_dominance(const ControlSet& set, double sigma,
                                                            double abscissa_tol = 1e-6) {
    DominanceCertificate best;
    for (const Mat2& a : set.centers()) {
        const Spectrum2 s = spectrum(a);
        if (s.kind != Spectrum2::Kind::Complex || std::abs(s.alpha - sigma) > abscissa_tol) continue;
        const Mat2 ellipse = detail::invariant_ellipse(a - s.alpha * Mat2::identity());
        const double scale = detail::spectral_norm_symmetric(ellipse) * std::max(1.0, frobenius_norm(a));
        if (detail::lmi_violation(set, ellipse, s.alpha) <= 1e-12 * scale) {
            best.kind = DominanceCertificate::Kind::Complex;
            best.matrix = a;
            best.ellipse = ellipse;
            return best;
        }
    }
    return best;
}

/// Complex certificate if one exists, otherwise the singular matrices of the
/// shifted hull when sigma is the largest real eigenvalue of the hull.
[[nodiscard]] inline DominanceCertificate classify_dominance(const ControlSet& set, double sigma,
                                                             double tol = 1e-6) {
    DominanceCertificate cert = complex_dominance(set, sigma, tol);
    if (cert.kind == DominanceCertificate::Kind::Complex) return cert;
    const double real_sup = real_eigenvalue_sup(set);
    if (!std::isfinite(real_sup) || std::abs(real_sup - sigma) > tol) return cert;
    cert.kind = DominanceCertificate::Kind::Real;
    const ControlSet shifted = set.shifted(real_sup);
    if (set.kind() == ControlSet::Kind::Finite) {
        for (const DegenerateMatrix& d : degenerate_in_hull(shifted)) cert.degenerate.push_back(d.matrix);
    } else if (set.kind() == ControlSet::Kind::FrobeniusBall) {
        if (auto m = ball_degenerate(shifted.center(), shifted.radius()).matrix) cert.degenerate.push_back(*m);
    }
    return cert;
}

struct LyapunovResult {
    enum class Snap { None, Real, Complex };
    double sigma = 0.0;
    double error = 0.0;  ///< half-width of the final bracket, 0 when snapped to a certificate
    int iterations = 0;
    Snap snapped = Snap::None;
};

/// Joint Lyapunov exponent by bisection on the shift. The result snaps to the exact
/// value when a complex certificate or the real-eigenvalue bound identifies it.
[[nodiscard]] inline LyapunovResult lyapunov_exponent(const ControlSet& set, double tol = 1e-9) {
    if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tolerance must be positive");
    LyapunovResult res;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = 0.0;
    for (const Mat2& a : set.centers()) {
        lower = std::max(lower, spectrum(a).abscissa);
        upper = std::max(upper, frobenius_norm(a));
    }
    if (set.identity_coefficient()) {
        lower = std::max(lower, *set.identity_coefficient());
        upper = std::max(upper, std::abs(*set.identity_coefficient()));
    }
    upper += set.radius();

    for (const Mat2& a : set.centers()) {
        const Spectrum2 s = spectrum(a);
        if (s.kind == Spectrum2::Kind::Complex && s.alpha >= lower &&
            complex_dominance(set, s.alpha, 0.0).kind == DominanceCertificate::Kind::Complex) {
            res.sigma = s.alpha;
            res.snapped = LyapunovResult::Snap::Complex;
            return res;
        }
    }
    const double real_sup = real_eigenvalue_sup(set);
    lower = std::max(lower, real_sup);

    IntegrationOptions opt;
    opt.tolerance = std::min(opt.tolerance, 0.1 * tol);
    auto stable_at = [&](double alpha) { return decide_stability(set.shifted(alpha), opt).stable; };
    double lo = lower - tol, hi = upper + tol;
    if (stable_at(lo) || !stable_at(hi))
        throw Error(ErrorCode::BracketFailure, "bisection bracket [" + std::to_string(lo) + ", " +
                                                   std::to_string(hi) + "] does not straddle the exponent for " +
                                                   set.describe());
    constexpr int budget = 60;
    while (0.5 * (hi - lo) > 0.5 * tol && res.iterations < budget) {
        const double mid = 0.5 * (lo + hi);
        if (stable_at(mid)) hi = mid;
        else lo = mid;
        ++res.iterations;
    }
    res.sigma = 0.5 * (lo + hi);
    res.error = 0.5 * (hi - lo);
    if (res.error > tol)
        log(LogLevel::Warn, "bisection budget exhausted with half-width " + std::to_string(res.error));
    if (std::isfinite(real_sup) && std::abs(res.sigma - real_sup) <= std::max(tol, 2.0 * res.error)) {
        res.sigma = real_sup;
        res.snapped = LyapunovResult::Snap::Real;
    }
    log(LogLevel::Info, "exponent " + std::to_string(res.sigma) + " after " + std::to_string(res.iterations) +
                            " bisection steps");
    return res;
}

}  // namespace pswitch
