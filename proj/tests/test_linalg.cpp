#include <catch2/catch_amalgamated.hpp>

#include "oracles.hpp"

#include <pswitch/linalg.hpp>

#include <cmath>
#include <random>

using namespace pswitch;
using Catch::Approx;

TEST_CASE("spectrum of a damped rotation is a complex pair", "[linalg]") {
    const Spectrum2 s = spectrum(Mat2{-0.2, -1, 1, -0.5});
    REQUIRE(s.kind == Spectrum2::Kind::Complex);
    CHECK(s.alpha == Approx(-0.35).margin(1e-15));
    const auto roots = oracle::quadratic_roots(1.0, 0.7, 0.1 + 1.0);
    CHECK(s.beta == Approx(std::abs(roots[0].imag())).epsilon(1e-14));
    CHECK(s.beta == Approx(0.98868599).epsilon(1e-7));
    CHECK(s.abscissa == Approx(-0.35).margin(1e-15));
}

TEST_CASE("spectrum of the pure rotation", "[linalg]") {
    const Spectrum2 s = spectrum(Mat2{0, -1, 1, 0});
    REQUIRE(s.kind == Spectrum2::Kind::Complex);
    CHECK(s.alpha == 0.0);
    CHECK(s.beta == Approx(1.0));
    CHECK(s.abscissa == 0.0);
}

TEST_CASE("spectrum of a diagonal matrix is an ordered real pair", "[linalg]") {
    const Spectrum2 s = spectrum(Mat2{-1, 0, 0, -2});
    REQUIRE(s.kind == Spectrum2::Kind::Real);
    CHECK(s.lambda1 == -2.0);
    CHECK(s.lambda2 == -1.0);
    CHECK(s.abscissa == -1.0);
}

TEST_CASE("spectral abscissa shifts exactly with the identity", "[linalg][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat2 m = oracle::random_matrix(rng);
        const double alpha = u(rng);
        const double shifted = spectrum(m - alpha * Mat2::identity()).abscissa;
        CHECK(shifted == Approx(spectrum(m).abscissa - alpha).margin(1e-12));
        const auto roots = oracle::quadratic_roots(1.0, -trace(m), det(m));
        CHECK(spectrum(m).abscissa == Approx(roots[1].real()).margin(1e-9));
    }
}

TEST_CASE("singular values of reference matrices", "[linalg]") {
    const SingularValues id = singular_values(Mat2::identity());
    CHECK(id.s1 == Approx(1.0));
    CHECK(id.s2 == Approx(1.0));

    // A0^T A0 = [[1.04,-0.3],[-0.3,1.25]]; its eigenvalues are the squared singular values.
    const auto sq = oracle::quadratic_roots(1.0, -(1.04 + 1.25), 1.04 * 1.25 - 0.09);
    const SingularValues a0 = singular_values(Mat2{-0.2, -1, 1, -0.5});
    CHECK(a0.s1 == Approx(std::sqrt(sq[0].real())).epsilon(1e-13));
    CHECK(a0.s2 == Approx(std::sqrt(sq[1].real())).epsilon(1e-13));
    CHECK(a0.s1 == Approx(0.909).margin(1e-3));
    CHECK(a0.s2 == Approx(1.209).margin(1e-3));

    const SingularValues rank1 = singular_values(Mat2{0, 0, 1, -1});
    CHECK(rank1.s1 == Approx(0.0).margin(1e-15));
    CHECK(rank1.s2 == Approx(std::sqrt(2.0)));
}

TEST_CASE("singular values reproduce determinant and Frobenius norm", "[linalg][property]") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat2 m = oracle::random_matrix(rng);
        const SingularValues sv = singular_values(m);
        CHECK(sv.s1 <= sv.s2);
        CHECK(sv.s1 * sv.s2 == Approx(std::abs(det(m))).margin(1e-12));
        CHECK(sv.s1 * sv.s1 + sv.s2 * sv.s2 == Approx(frobenius_norm(m) * frobenius_norm(m)).epsilon(1e-12));
    }
}

TEST_CASE("kernel and image directions of rank-one matrices", "[linalg]") {
    const double h = 1.0 / std::sqrt(2.0);
    const Mat2 a{0, 0, 1, -1};
    CHECK(kernel_direction(a).x1 == Approx(h));
    CHECK(kernel_direction(a).x2 == Approx(h));
    CHECK(image_direction(a).x1 == Approx(0.0).margin(1e-15));
    CHECK(image_direction(a).x2 == Approx(1.0));

    const Mat2 b{0, 0, -1, -1};
    CHECK(kernel_direction(b).x1 == Approx(h));
    CHECK(kernel_direction(b).x2 == Approx(-h));
    CHECK(image_direction(b).x2 == Approx(1.0));

    const Mat2 c{-1, 0, 0, 0};
    CHECK(kernel_direction(c).x1 == Approx(0.0).margin(1e-15));
    CHECK(kernel_direction(c).x2 == Approx(1.0));
    CHECK(image_direction(c).x1 == Approx(1.0));
    CHECK(image_direction(c).x2 == Approx(0.0).margin(1e-15));
}

TEST_CASE("kernel direction rejects regular and zero matrices", "[linalg]") {
    try {
        (void)kernel_direction(Mat2::identity());
        FAIL("expected NotDegenerate");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotDegenerate);
    }
    try {
        (void)kernel_direction(Mat2{});
        FAIL("expected ZeroMatrix");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroMatrix);
    }
}

TEST_CASE("kernel direction is annihilated for random rank-one matrices", "[linalg][property]") {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 200; ++trial) {
        const Vec2 u{n(rng), n(rng)};
        const Vec2 v{n(rng), n(rng)};
        const Mat2 m = outer(u, v);
        const Vec2 k = kernel_direction(m);
        CHECK(norm(m * k) <= 1e-12 * frobenius_norm(m));
        CHECK(std::abs(cross(image_direction(m), u)) <= 1e-12 * norm(u));
    }
}

TEST_CASE("oriented angles follow the counterclockwise convention", "[linalg]") {
    CHECK(oriented_angle({1, 0}, {0, 1}) == Approx(pi / 2));
    CHECK(oriented_angle({1, 0}, {0, -1}) == Approx(-pi / 2));
    CHECK(oriented_angle({1, 1}, {-1, -1}) == Approx(pi));
    CHECK(oriented_angle({1, 0}, {-1, -0.0}) == pi);
    CHECK(oriented_angle({1, 0}, {-1, 0}) == pi);
    CHECK(oriented_angle({3, 4}, {3, 4}) == 0.0);
    try {
        (void)oriented_angle({0, 0}, {1, 0});
        FAIL("expected ZeroVector");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ZeroVector);
    }
}

TEST_CASE("oriented angle agrees with complex division and is antisymmetric", "[linalg][property]") {
    std::mt19937_64 rng(14);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 500; ++trial) {
        const Vec2 a{n(rng), n(rng)};
        const Vec2 b{n(rng), n(rng)};
        const double ab = oriented_angle(a, b);
        CHECK(ab > -pi);
        CHECK(ab <= pi);
        CHECK(ab == Approx(oracle::angle_from_to(a, b)).margin(1e-12));
        const double sum = ab + oriented_angle(b, a);
        CHECK((std::abs(sum) < 1e-12 || std::abs(sum - 2 * pi) < 1e-12));
    }
}

TEST_CASE("angle normalisation is idempotent", "[linalg][property]") {
    for (double a : {-7.0, -pi, -1e-17, 0.0, 1.0, pi, 2 * pi, 13.0}) {
        const double once = normalize_angle(a);
        CHECK(once >= 0.0);
        CHECK(once < 2 * pi);
        CHECK(normalize_angle(once) == once);
        const double line = normalize_line_angle(a);
        CHECK(line >= 0.0);
        CHECK(line < pi);
        CHECK(normalize_line_angle(line) == line);
    }
}

TEST_CASE("Metzler test inspects the off-diagonal signs", "[linalg]") {
    CHECK(is_metzler(Mat2{-1, 2, 0, -3}));
    CHECK_FALSE(is_metzler(Mat2{0, -1, 1, 0}));
    CHECK(is_metzler(Mat2{-5, 0, 0, -5}));
}

TEST_CASE("closed-form exponential matches the Taylor series", "[linalg][property]") {
    std::mt19937_64 rng(15);
    std::uniform_real_distribution<double> time(-2.0, 2.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat2 m = oracle::random_matrix(rng);
        const double t = time(rng);
        const Mat2 ours = expm(m, t);
        const Mat2 ref = oracle::taylor_expm(t * m);
        CHECK(frobenius_norm(ours - ref) <= 1e-11 * std::max(1.0, frobenius_norm(ref)));
    }
    // Nilpotent and scalar corner cases.
    const Mat2 nil = expm(Mat2{0, 1, 0, 0}, 3.0);
    CHECK(nil.a12 == Approx(3.0));
    CHECK(nil.a11 == Approx(1.0));
    const Mat2 scalar = expm(2.0 * Mat2::identity(), 0.5);
    CHECK(scalar.a11 == Approx(std::exp(1.0)));
    CHECK(scalar.a12 == 0.0);
}

TEST_CASE("null directions of a binary quadratic form", "[linalg]") {
    // c*s = 0 vanishes on both axes.
    auto dirs = null_directions(0.0, 1.0, 0.0);
    REQUIRE(dirs.size() == 2);
    CHECK(dirs[0] == Approx(0.0).margin(1e-15));
    CHECK(dirs[1] == Approx(pi / 2));
    // c^2 + s^2 never vanishes.
    CHECK(null_directions(1.0, 0.0, 1.0).empty());
    std::mt19937_64 rng(16);
    std::normal_distribution<double> n;
    for (int trial = 0; trial < 200; ++trial) {
        const double a = n(rng), b = n(rng), d = n(rng);
        for (double g : null_directions(a, b, d)) {
            const double c = std::cos(g), s = std::sin(g);
            CHECK(std::abs(a * c * c + b * c * s + d * s * s) <= 1e-12 * (std::abs(a) + std::abs(b) + std::abs(d)));
            CHECK(g >= 0.0);
            CHECK(g < pi);
        }
    }
}

TEST_CASE("symmetric eigenvalue bound", "[linalg]") {
    CHECK(max_eigenvalue_symmetric(Mat2{2, 1, 1, 2}) == Approx(3.0));
    CHECK(max_eigenvalue_symmetric(Mat2{-1, 0, 0, -4}) == Approx(-1.0));
}
