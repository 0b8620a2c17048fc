// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <pswitch/applications.hpp>
#include <pswitch/io.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

using namespace pswitch;
using namespace fixture;

namespace {

const Mat2 focus{-0.2, -1.0, 1.0, -0.5};

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// Spheres built along the way, collected for the slope check.
struct BuiltSphere {
    std::string label;
    ControlSet set;
    SphereModel sphere;
};
std::vector<BuiltSphere> built;

nlohmann::json run_cli(const std::string& args, int& code) {
    const auto out = std::filesystem::temp_directory_path() / "pswitch_acceptance.json";
    const std::string cmd = std::string(PSWITCH_CLI_PATH) + " " + args + " --out " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return nlohmann::json::parse(io::read_file(out.string()));
}

std::string write_spec(const ControlSet& set, const std::string& name) {
    const auto path = std::filesystem::temp_directory_path() / name;
    io::write_file(path.string(), io::spec_json(set));
    return path.string();
}

Outcome critical_radius_value() {
    const auto start = std::chrono::steady_clock::now();
    int code = 0;
    const auto report = run_cli("ball-radius " + write_spec(ControlSet::frobenius_ball(focus, 0.0), "center.json"), code);
    const double elapsed = seconds_since(start);
    const double r = report.at("radius").get<double>();
    return {code == 0 && std::abs(r - 0.3475) <= 1e-3 && elapsed < 60.0,
            "R = " + fmt(r) + " in " + fmt(elapsed) + " s"};
}

Outcome endpoint_verdicts() {
    std::string detail;
    bool ok = true;
    for (const auto& [r, expected] : {std::pair{0.1, 0}, std::pair{0.4, 2}}) {
        const auto start = std::chrono::steady_clock::now();
        int code = 0;
        const auto report = run_cli("stability " + write_spec(ControlSet::frobenius_ball(focus, r), "endpoint.json"), code);
        const double elapsed = seconds_since(start);
        ok = ok && code == expected && elapsed < 10.0;
        detail += "r = " + fmt(r) + " " + report.at("verdict").get<std::string>() + " in " + fmt(elapsed) + " s; ";
    }
    return {ok, detail};
}

Outcome single_matrix_exponent() {
    int code = 0;
    const auto report = run_cli("lyapunov " + write_spec(ControlSet::finite({focus}), "single.json") + " --tol 1e-6", code);
    const double sigma = report.at("sigma").get<double>();
    return {code == 0 && std::abs(sigma + 0.35) <= 1e-6, "sigma = " + fmt(sigma)};
}

Outcome radius_below_exponent_modulus() {
    const auto res = critical_radius(focus, 1e-4, {.with_sphere = false});
    const double sigma = lyapunov_exponent(ControlSet::finite({focus}), 1e-9).sigma;
    return {res.radius < std::abs(sigma), "R = " + fmt(res.radius) + " vs |sigma| = " + fmt(std::abs(sigma))};
}

Outcome shift_identity() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> shift(-1.0, 1.0);
    double worst = 0.0;
    int tested = 0;
    while (tested < 50) {
        const auto set = ControlSet::finite({oracle::random_matrix(rng), oracle::random_matrix(rng)});
        if (set.common_eigenvector()) continue;
        const double alpha = shift(rng);
        const double base = lyapunov_exponent(set, 1e-8).sigma;
        const double moved = lyapunov_exponent(set.shifted(alpha), 1e-8).sigma;
        worst = std::max(worst, std::abs(moved - (base - alpha)));
        ++tested;
    }
    return {worst <= 2e-6, "50 sets, worst " + fmt(worst)};
}

Outcome periodic_closure() {
    std::mt19937_64 rng(202);
    double worst_lambda = 0.0, worst_out = 0.0;
    int tested = 0, failed = 0;
    for (int draws = 0; tested < 20 && draws < 400; ++draws) {
        const auto set = ControlSet::finite(spinning_pair(rng));
        const auto result = barabanov_norm(set, 1e-10);
        const auto shifted = set.shifted(result.sigma);
        if (!degenerate_in_hull(shifted).empty()) continue;
        ++tested;
        const double lambda_gap = std::abs(std::exp(result.sphere.closure_error()) - 1.0);
        const auto report = check_barabanov(shifted, result.sphere, 2048, 1e-5);
        worst_lambda = std::max(worst_lambda, lambda_gap);
        worst_out = std::max(worst_out, report.worst_outward);
        if (lambda_gap > 1e-6 || !report.passed) ++failed;
        built.push_back({"periodic " + std::to_string(tested), shifted, result.sphere});
    }
    return {tested == 20 && failed == 0, std::to_string(tested) + " sets, worst |lambda - 1| " + fmt(worst_lambda) +
                                             ", worst outward " + fmt(worst_out)};
}

Outcome ellipse_family() {
    double worst = 0.0;
    for (double beta : {0.2, 0.5, 1.5, 2.0, 3.0, 7.0}) {
        const auto set = ControlSet::finite({Mat2{0.0, -beta * beta, 1.0, 0.0}});
        const auto sphere = assemble_sphere(set);
        const double c = sphere.radius(0.0);
        for (int k = 0; k < 720; ++k) {
            const Vec2 u = unit_at(k * pi / 720);
            const double exact = c / std::sqrt(u.x1 * u.x1 + beta * beta * u.x2 * u.x2);
            worst = std::max(worst, std::abs(sphere.radius(k * pi / 720) - exact) / exact);
        }
        built.push_back({"ellipse beta " + fmt(beta), set, sphere});
    }
    return {worst <= 1e-6, "worst relative radial error " + fmt(worst)};
}

Outcome polygon_round_trip() {
    const std::vector<std::pair<std::string, std::vector<Vec2>>> shapes{
        {"square", {{1, 1}, {-1, 1}, {-1, -1}, {1, -1}}},
        {"rectangle", {{2, 1}, {-2, 1}, {-2, -1}, {2, -1}}},
        {"hexagon", regular_polygon(6)}};
    bool ok = true;
    std::string detail;
    for (const auto& [name, poly] : shapes) {
        const auto set = polygon_to_system(poly);
        const double sigma = lyapunov_exponent(set, 1e-8).sigma;
        const auto target = SphereModel::polygon(poly);
        const bool invariant = check_barabanov(set, target, 2048).passed;
        const auto rebuilt = assemble_sphere(set, choice_for_polygon(build_partition(set), target));
        const double scale = target.radius(rebuilt.origin()) / rebuilt.radius(rebuilt.origin());
        double worst = 0.0;
        for (int k = 0; k < 2048; ++k) {
            const double gamma = k * two_pi / 2048;
            worst = std::max(worst, std::abs(scale * rebuilt.radius(gamma) - target.radius(gamma)) / target.radius(gamma));
        }
        ok = ok && std::abs(sigma) <= 1e-6 && invariant && worst <= 1e-3;
        detail += name + ": sigma " + fmt(sigma) + (invariant ? " invariant" : " NOT invariant") + " radial " +
                  fmt(worst) + "; ";
        built.push_back({name, set, rebuilt});
    }
    return {ok, detail};
}

Outcome uniqueness_classification() {
    std::mt19937_64 rng(303);
    int unique = 0, total = 0;
    auto record = [&](const Mat2& center, const std::string& label) {
        const auto res = critical_radius(center, 1e-4);
        ++total;
        if (res.sphere && res.sphere->uniqueness().unique) ++unique;
        if (res.sphere)
            built.push_back({label, ControlSet::frobenius_ball(center, res.radius).shifted(res.sigma_at_radius), *res.sphere});
    };
    record(focus, "focus ball");
    for (int k = 0; k < 9; ++k) record(random_hurwitz(rng), "ball " + std::to_string(k));

    const auto set = ControlSet::finite(two_pencil_square());
    const auto canonical = assemble_sphere(set);
    const auto tilted = assemble_sphere(set, std::vector<double>{0.3, -0.3});
    const bool many = canonical.uniqueness().reason == UniquenessReport::Reason::InfinitelyMany;
    const double gap = radial_gap(canonical, tilted);
    const bool both = check_barabanov(set, canonical, 2048).passed && check_barabanov(set, tilted, 2048).passed;
    built.push_back({"two-pencil canonical", set, canonical});
    built.push_back({"two-pencil tilted", set, tilted});
    return {unique == total && many && gap > 1e-3 && both,
            std::to_string(unique) + "/" + std::to_string(total) + " balls unique; two-pencil " +
                std::string(to_string(canonical.uniqueness().reason)) + ", gap " + fmt(gap) +
                (both ? ", both invariant" : ", NOT both invariant")};
}

Outcome slope_law() {
    double worst = 1.0;
    std::string worst_label;
    for (const auto& b : built) {
        const double share = slope_agreement(b.set, b.sphere);
        if (share < worst) {
            worst = share;
            worst_label = b.label;
        }
    }
    return {!built.empty() && worst >= 0.95,
            std::to_string(built.size()) + " spheres, lowest agreement " + fmt(worst) + " (" + worst_label + ")"};
}

Outcome oracle_equivalence() {
    std::mt19937_64 rng(404);
    double worst = 0.0;
    int compared = 0, skipped = 0;
    for (int draws = 0; compared < 10 && draws < 200; ++draws) {
        const std::vector<Mat2> gens{oracle::random_matrix(rng), oracle::random_matrix(rng)};
        const auto set = ControlSet::finite(gens);
        if (set.common_eigenvector()) continue;
        std::optional<BarabanovResult> result;
        try {
            result = barabanov_norm(set, 1e-10);
        } catch (const Error&) {
            ++skipped;
            continue;
        }
        if (!result->sphere.uniqueness().unique) continue;
        // Coarser grids miss generator switches inside a cell on very eccentric spheres.
        const int n = 16384;
        const auto ref = oracle::max_plus_sphere(gens, n);
        const double r0 = result->sphere.radius(0.0);
        double here = 0.0;
        for (int j = 0; j < n; ++j) {
            const double grid = std::exp(ref.g[j] - ref.g[0]);
            here = std::max(here, std::abs(result->sphere.radius(j * pi / n) / r0 / grid - 1.0));
        }
        worst = std::max(worst, here);
        ++compared;
    }
    return {compared == 10 && worst <= 1e-3, std::to_string(compared) + " systems, worst relative radial gap " + fmt(worst) +
                                                 ", " + std::to_string(skipped) + " builder errors skipped"};
}

}  // namespace

int main() {
    set_log_level(LogLevel::Warn);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"critical radius of the focus ball", critical_radius_value},
        {"stable at r = 0.1, unstable at r = 0.4", endpoint_verdicts},
        {"exponent of the single focus matrix", single_matrix_exponent},
        {"critical radius below the exponent modulus", radius_below_exponent_modulus},
        {"shift identity on random pairs", shift_identity},
        {"periodic closure without real dominance", periodic_closure},
        {"ellipse for stretched rotations", ellipse_family},
        {"polygon round trip", polygon_round_trip},
        {"uniqueness classification", uniqueness_classification},
        {"slope law on constructed spheres", slope_law},
        {"dense oracle equivalence", oracle_equivalence},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        const auto start = std::chrono::steady_clock::now();
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("%s %2zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                    o.detail.c_str(), seconds_since(start));
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
