#include <catch2/catch_amalgamated.hpp>

#include <pswitch/applications.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

#include <random>

using namespace pswitch;
using Catch::Approx;
using fixture::random_hurwitz;
using fixture::regular_polygon;

namespace {

const Mat2 focus{-0.2, -1.0, 1.0, -0.5};

bool contains_matrix(const std::vector<Mat2>& list, const Mat2& m, double tol = 1e-12) {
    return std::any_of(list.begin(), list.end(), [&](const Mat2& a) { return frobenius_norm(a - m) <= tol; });
}

}  // namespace

TEST_CASE("critical radius of the focus ball", "[radius]") {
    const auto res = critical_radius(focus, 1e-4);
    CHECK(res.radius == Approx(0.3475).margin(1e-3));
    // Left round ratio of the ball by Simpson over a dense disc scan; root by bisection.
    double lo = 0.3, hi = 0.4;
    for (int it = 0; it < 30; ++it) {
        const double mid = 0.5 * (lo + hi);
        (oracle::ball_left_log_lambda(focus, mid, 2000) < 0.0 ? lo : hi) = mid;
    }
    CHECK(res.radius == Approx(0.5 * (lo + hi)).margin(2e-4));
    CHECK(res.radius < 0.35);
    CHECK(std::abs(res.sigma_at_radius) < 1e-3);
    REQUIRE(res.sphere);
    CHECK(res.sphere->uniqueness().unique);
}

TEST_CASE("critical radius brackets the stability switch", "[radius][property]") {
    std::mt19937_64 rng(7);
    const double tol = 1e-4;
    for (int k = 0; k < 20; ++k) {
        const Mat2 center = random_hurwitz(rng);
        const auto res = critical_radius(center, tol, {.with_sphere = false});
        INFO(to_string(center) << " R = " << res.radius);
        CHECK(decide_stability(ControlSet::frobenius_ball(center, res.radius - 2 * tol)).stable);
        CHECK_FALSE(decide_stability(ControlSet::frobenius_ball(center, res.radius + 2 * tol)).stable);
        // At the critical radius the ball holds at most one singular matrix.
        CHECK_FALSE(ball_degenerate(center, res.radius - 2 * tol).non_unique);
        CHECK(res.radius <= singular_values(center).s1 + tol);
    }
}

TEST_CASE("near-radial contraction loses stability at unit radius", "[radius]") {
    const Mat2 center{-1.0, -1e-3, 1e-3, -1.0};
    const auto res = critical_radius(center, 1e-5, {.with_sphere = false});
    // The ball first holds a matrix with eigenvalue zero at r = s1(center).
    const double scan = oracle::ball_ray_distance_scan(center, 20000);
    CHECK(res.radius == Approx(1.0).margin(1e-2));
    CHECK(res.radius <= scan + 1e-5);
}

TEST_CASE("critical radius rejects unstable centers", "[radius]") {
    try {
        (void)critical_radius(Mat2{0.1, -1.0, 1.0, 0.1}, 1e-4);
        FAIL("expected NotHurwitz");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::NotHurwitz);
    }
    CHECK_THROWS_AS(critical_radius(focus, 0.0), Error);
}

TEST_CASE("noise reduction", "[noise]") {
    const auto same = reduce_noisy({focus}, NoiseModel::elementwise(Mat2{}));
    REQUIRE(same.kind() == ControlSet::Kind::Finite);
    REQUIRE(same.generators().size() == 1);
    CHECK(frobenius_norm(same.generators()[0] - focus) == 0.0);

    const auto ball = reduce_noisy({focus}, NoiseModel::frobenius(0.2));
    CHECK(ball.kind() == ControlSet::Kind::FrobeniusBall);
    CHECK(ball.radius() == 0.2);

    const Mat2 other{-1.0, 0.5, -0.3, -0.7};
    const auto boxed = reduce_noisy({focus, other}, NoiseModel::elementwise(Mat2{0.1, 0.1, 0.1, 0.1}));
    REQUIRE(boxed.generators().size() == 32);
    // Independent enumeration of the sign patterns.
    for (const Mat2& base : {focus, other})
        for (int mask = 0; mask < 16; ++mask) {
            const auto sgn = [&](int bit) { return (mask >> bit & 1) ? 0.1 : -0.1; };
            CHECK(contains_matrix(boxed.generators(), base + Mat2{sgn(0), sgn(1), sgn(2), sgn(3)}));
        }

    // Zero bounds on some entries collapse duplicate vertices.
    const auto partial = reduce_noisy({focus}, NoiseModel::elementwise(Mat2{0.1, 0.0, 0.0, 0.0}));
    CHECK(partial.generators().size() == 2);

    const auto poly = reduce_noisy({focus, other}, NoiseModel::polytope({Mat2{}, Mat2{0.1, 0.0, 0.0, 0.0}}));
    CHECK(poly.generators().size() == 4);

    const auto noisy = reduce_noisy({focus, other}, NoiseModel::frobenius(0.1));
    CHECK(noisy.kind() == ControlSet::Kind::NoisySum);
}

TEST_CASE("square polygon gives the two facet matrices", "[inverse]") {
    const std::vector<Vec2> square{{1, 1}, {-1, 1}, {-1, -1}, {1, -1}};
    const auto set = polygon_to_system(square);
    REQUIRE(set.generators().size() == 2);
    CHECK(contains_matrix(set.generators(), Mat2{0, 0, 0, -1}));
    CHECK(contains_matrix(set.generators(), Mat2{-1, 0, 0, 0}));
}

TEST_CASE("facet matrices fix the midpoint and contract along the facet", "[inverse][property]") {
    for (const auto& poly : {regular_polygon(6), regular_polygon(10, 0.1),
                             std::vector<Vec2>{{2, 1}, {-2, 1}, {-2, -1}, {2, -1}}}) {
        const auto set = polygon_to_system(poly);
        const std::size_t n = poly.size() / 2;
        REQUIRE(set.generators().size() == n);
        for (std::size_t i = 0; i < n; ++i) {
            const Mat2& a = set.generators()[i];
            const Vec2 mid = 0.5 * (poly[i] + poly[i + 1]), dir = poly[i + 1] - poly[i];
            CHECK(norm(a * mid) < 1e-12);
            CHECK(norm(a * dir + dir) < 1e-12);
            CHECK(is_degenerate(a));
        }
        CHECK(check_barabanov(set, SphereModel::polygon(poly), 2048).passed);
        CHECK(std::abs(lyapunov_exponent(set, 1e-8).sigma) <= 1e-6);
    }
}

TEST_CASE("polygons are validated", "[inverse]") {
    auto code_of = [](const std::vector<Vec2>& v) {
        try {
            (void)polygon_to_system(v);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::Parse;
    };
    CHECK(code_of({{1, 0}, {0, 1}, {-1, 0}}) == ErrorCode::InvalidPolygon);                       // odd count
    CHECK(code_of({{1, 0}, {0, 1}, {-1, 0}, {0, -2}}) == ErrorCode::InvalidPolygon);              // not symmetric
    CHECK(code_of({{1, 0}, {0, -1}, {-1, 0}, {0, 1}}) == ErrorCode::InvalidPolygon);              // clockwise
    CHECK(code_of({{2, 0}, {0.1, 0.1}, {0, 2}, {-2, 0}, {-0.1, -0.1}, {0, -2}}) == ErrorCode::InvalidPolygon);  // not convex
}

TEST_CASE("polygon spheres are rebuilt from their own facet systems", "[inverse][roundtrip]") {
    const std::vector<std::vector<Vec2>> shapes{
        {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}, {{2, 1}, {-2, 1}, {-2, -1}, {2, -1}}, regular_polygon(6, 0.2)};
    for (const auto& poly : shapes) {
        const auto set = polygon_to_system(poly);
        const auto target = SphereModel::polygon(poly);
        const auto partition = build_partition(set);
        const auto choice = choice_for_polygon(partition, target);
        const auto rebuilt = assemble_sphere(set, choice);
        const double scale = target.radius(rebuilt.origin()) / rebuilt.radius(rebuilt.origin());
        double worst = 0.0;
        for (int k = 0; k < 1024; ++k) {
            const double gamma = k * two_pi / 1024;
            worst = std::max(worst, std::abs(scale * rebuilt.radius(gamma) - target.radius(gamma)) / target.radius(gamma));
        }
        CHECK(worst <= 1e-3);
        CHECK(check_barabanov(set, rebuilt, 2048).passed);
    }
}
