// pswitch: stability, exponent and invariant-norm tools for planar switching systems.

#include <pswitch/applications.hpp>
#include <pswitch/barabanov.hpp>
#include <pswitch/io.hpp>
#include <pswitch/log.hpp>
#include <pswitch/stability.hpp>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace pswitch;
using Json = nlohmann::ordered_json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_unstable = 2;

struct Common {
    std::string input;
    std::string out;
    double tol = 0.0;
};

Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json vec_json(const Vec2& v) { return Json::array({v.x1, v.x2}); }

Json mat_json(const Mat2& m) { return Json::array({Json::array({m.a11, m.a12}), Json::array({m.a21, m.a22})}); }

Json report_head(const std::string& command, const Common& c) {
    Json r;
    r["schema"] = 1;
    r["command"] = command;
    r["input"] = c.input;
    return r;
}

void emit(Json report, const Common& c, std::chrono::steady_clock::time_point started) {
    report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::string text = report.dump(2) + "\n";
    if (c.out.empty()) std::cout << text;
    else io::write_file(c.out, text);
}

Json diagnostics(const ControlSet& set) {
    Json d = Json::array();
    if (auto v = set.common_eigenvector()) {
        const std::string msg = "reducible: all generators share the eigenvector " + to_string(*v);
        log(LogLevel::Warn, msg);
        d.push_back(msg);
    }
    return d;
}

Json round_json(const std::optional<RoundOutcome>& o) {
    if (!o) return nullptr;
    Json j;
    j["outcome"] = std::string(to_string(o->kind));
    j["lambda"] = number_or_null(o->lambda);
    j["angle"] = o->angle;
    return j;
}

Json check_json(const CheckReport& c) {
    Json j;
    j["passed"] = c.passed;
    j["samples"] = c.samples;
    j["worst_outward"] = c.worst_outward;
    j["worst_outward_angle"] = c.worst_outward_angle;
    j["worst_tangent_gap"] = c.worst_tangent_gap;
    j["worst_tangent_angle"] = c.worst_tangent_angle;
    return j;
}

std::string kind_name(SphereModel::Kind k) {
    switch (k) {
        case SphereModel::Kind::Ellipse: return "ellipse";
        case SphereModel::Kind::Periodic: return "periodic";
        case SphereModel::Kind::Partitioned: return "partitioned";
        case SphereModel::Kind::Polygon: return "polygon";
    }
    return "unknown";
}

Json sphere_json(const SphereModel& s) {
    Json j;
    j["kind"] = kind_name(s.kind());
    j["origin"] = s.origin();
    j["closure_error"] = s.closure_error();
    j["meeting_points"] = s.meeting_points();
    j["corners"] = s.corners();
    if (s.ellipse_matrix()) j["ellipse"] = mat_json(*s.ellipse_matrix());
    return j;
}

Json partition_json(const std::vector<IntervalTag>& tags) {
    Json arr = Json::array();
    for (const IntervalTag& t : tags) {
        Json j;
        j["kind"] = std::string(to_string(t.kind));
        j["begin"] = t.begin;
        j["end"] = t.end;
        switch (t.kind) {
            case IntervalTag::Kind::R: j["image"] = vec_json(t.pencil->image); break;
            case IntervalTag::Kind::D: j["matrices"] = t.kernel_matrices.size(); break;
            case IntervalTag::Kind::H: j["source_end"] = t.source_end == Side::Left ? "begin" : "end"; break;
            case IntervalTag::Kind::P:
                j["m"] = number_or_null(t.m);
                j["M"] = number_or_null(t.M);
                j["s"] = t.s;
                break;
        }
        j["delta"] = t.delta;
        arr.push_back(j);
    }
    return arr;
}

Json uniqueness_json(const UniquenessReport& u) {
    Json j;
    j["unique"] = u.unique;
    j["reason"] = std::string(to_string(u.reason));
    j["slack"] = u.slack;
    return j;
}

Json write_artifacts(const SphereModel& sphere, const std::string& csv, const std::string& svg) {
    Json a = Json::object();
    if (!csv.empty()) {
        io::write_file(csv, io::polyline_csv(sphere));
        a["csv"] = csv;
    }
    if (!svg.empty()) {
        io::write_file(svg, io::polyline_svg(sphere));
        a["svg"] = svg;
    }
    return a;
}

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(io::parse_number(item));
    if (out.empty()) throw Error(ErrorCode::InvalidArgument, "empty increment list");
    return out;
}

int cmd_stability(const Common& c) {
    const auto started = std::chrono::steady_clock::now();
    const ControlSet set = io::load_spec(c.input);
    IntegrationOptions opt;
    if (c.tol > 0.0) opt.tolerance = c.tol;
    const StabilityVerdict v = decide_stability(set, opt);
    Json r = report_head("stability", c);
    r["set"] = set.describe();
    r["verdict"] = v.stable ? "stable" : "unstable";
    r["reason"] = std::string(to_string(v.reason));
    if (v.reason == StabilityVerdict::Reason::IncreasingRound) {
        r["side"] = v.side == Side::Left ? "left" : "right";
        r["lambda"] = v.lambda;
    }
    if (v.witness) {
        r["witness"] = Json{{"matrix", mat_json(v.witness->matrix)},
                            {"eigenvalue", v.witness->eigenvalue},
                            {"eigenvector", vec_json(v.witness->eigenvector)}};
    }
    r["rounds"] = Json{{"left", round_json(v.left)}, {"right", round_json(v.right)}};
    r["diagnostics"] = diagnostics(set);
    emit(r, c, started);
    return v.stable ? exit_ok : exit_unstable;
}

int cmd_lyapunov(const Common& c) {
    const auto started = std::chrono::steady_clock::now();
    const ControlSet set = io::load_spec(c.input);
    const double tol = c.tol > 0.0 ? c.tol : 1e-9;
    const LyapunovResult res = lyapunov_exponent(set, tol);
    const DominanceCertificate dom = classify_dominance(set, res.sigma, std::max(tol, 1e-9));
    Json r = report_head("lyapunov", c);
    r["set"] = set.describe();
    r["sigma"] = res.sigma;
    r["error"] = res.error;
    r["tolerance"] = tol;
    r["iterations"] = res.iterations;
    r["snapped"] = res.snapped == LyapunovResult::Snap::None   ? "none"
                   : res.snapped == LyapunovResult::Snap::Real ? "real"
                                                               : "complex";
    r["dominance"] = std::string(to_string(dom.kind));
    r["diagnostics"] = diagnostics(set);
    emit(r, c, started);
    return exit_ok;
}

int cmd_norm(const Common& c, const std::string& s_vector, const std::string& csv, const std::string& svg, int samples) {
    const auto started = std::chrono::steady_clock::now();
    const ControlSet set = io::load_spec(c.input);
    const double tol = c.tol > 0.0 ? c.tol : 1e-9;
    std::optional<std::vector<double>> choice;
    if (!s_vector.empty()) choice = parse_list(s_vector);
    BarabanovResult res;
    try {
        res = barabanov_norm(set, tol, choice);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::BudgetInfeasible) throw;
        throw Error(ErrorCode::BudgetInfeasible,
                    std::string(e.what()) + " (the exponent is likely not accurate enough; retry with a smaller --tol)");
    }
    const ControlSet shifted = set.shifted(res.sigma);
    Json r = report_head("norm", c);
    r["set"] = set.describe();
    r["sigma"] = res.sigma;
    r["sigma_error"] = res.exponent.error;
    r["refinements"] = res.refinements;
    r["dominance"] = std::string(to_string(classify_dominance(set, res.sigma, std::max(tol, 1e-9)).kind));
    r["sphere"] = sphere_json(res.sphere);
    r["partition"] = partition_json(res.sphere.partition());
    r["uniqueness"] = uniqueness_json(res.sphere.uniqueness());
    r["check"] = check_json(check_barabanov(shifted, res.sphere, samples));
    r["artifacts"] = write_artifacts(res.sphere, csv, svg);
    r["diagnostics"] = diagnostics(set);
    emit(r, c, started);
    return exit_ok;
}

int cmd_ball_radius(const Common& c, bool no_sphere, const std::string& csv, const std::string& svg) {
    const auto started = std::chrono::steady_clock::now();
    const ControlSet spec = io::load_spec(c.input);
    if (spec.kind() == ControlSet::Kind::Finite && spec.generators().size() != 1)
        throw Error(ErrorCode::InvalidArgument, "ball-radius needs a single center matrix or a frobenius_ball spec");
    const Mat2 center = spec.center();
    const double tol = c.tol > 0.0 ? c.tol : 1e-4;
    const CriticalRadiusResult res = critical_radius(center, tol, {.with_sphere = !no_sphere});
    Json r = report_head("ball-radius", c);
    r["center"] = mat_json(center);
    r["radius"] = res.radius;
    r["tolerance"] = tol;
    r["iterations"] = res.iterations;
    r["sigma_at_radius"] = res.sigma_at_radius;
    if (res.sphere) {
        r["sphere"] = sphere_json(*res.sphere);
        r["uniqueness"] = uniqueness_json(res.sphere->uniqueness());
        r["artifacts"] = write_artifacts(*res.sphere, csv, svg);
    }
    emit(r, c, started);
    return exit_ok;
}

int cmd_inverse(const Common& c) {
    const ControlSet set = polygon_to_system(io::parse_polygon_csv(io::read_file(c.input)));
    const std::string spec = io::spec_json(set);
    if (c.out.empty()) std::cout << spec;
    else io::write_file(c.out, spec);
    return exit_ok;
}

int cmd_reduce_noise(const Common& c) {
    const std::string spec = io::spec_json(io::load_spec(c.input));
    if (c.out.empty()) std::cout << spec;
    else io::write_file(c.out, spec);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stability, Lyapunov exponents and invariant norms of planar switching systems"};
    app.require_subcommand(1);

    Common common;
    std::string s_vector, csv, svg;
    int samples = 2048;
    bool no_sphere = false;

    auto add_common = [&](CLI::App* sub, const std::string& input_help, const std::string& tol_help) {
        sub->add_option("input", common.input, input_help)->required();
        sub->add_option("--out", common.out, "Write the result here instead of stdout");
        if (!tol_help.empty()) sub->add_option("--tol", common.tol, tol_help)->check(CLI::PositiveNumber);
    };

    auto* stability = app.add_subcommand("stability", "Decide asymptotic stability (exit 0 stable, 2 unstable)");
    add_common(stability, "System spec (JSON)", "Quadrature tolerance per radian (default 1e-10)");

    auto* lyap = app.add_subcommand("lyapunov", "Joint Lyapunov exponent by bisection");
    add_common(lyap, "System spec (JSON)", "Bisection tolerance (default 1e-9)");

    auto* norm_cmd = app.add_subcommand("norm", "Exponent and invariant sphere");
    add_common(norm_cmd, "System spec (JSON)", "Exponent tolerance (default 1e-9)");
    norm_cmd->add_option("--s-vector", s_vector, "Comma-separated increments for the free intervals");
    norm_cmd->add_option("--csv", csv, "Write the sphere as a theta,x1,x2 polyline");
    norm_cmd->add_option("--svg", svg, "Write the sphere as an SVG path");
    norm_cmd->add_option("--samples", samples, "Checker sample count")->check(CLI::PositiveNumber);

    auto* ball = app.add_subcommand("ball-radius", "Critical Frobenius radius around a Hurwitz center");
    add_common(ball, "Spec holding the center (frobenius_ball or a single finite matrix)",
               "Radius tolerance (default 1e-4)");
    ball->add_flag("--no-sphere", no_sphere, "Skip building the sphere of the critical ball");
    ball->add_option("--csv", csv, "Write the critical sphere as a polyline");
    ball->add_option("--svg", svg, "Write the critical sphere as an SVG path");

    auto* inverse = app.add_subcommand("inverse", "Facet system of a symmetric polygon");
    add_common(inverse, "Polygon CSV (x1,x2 per row, counterclockwise, all 2n vertices)", "");

    auto* reduce = app.add_subcommand("reduce-noise", "Expand a noisy spec into an equivalent control set");
    add_common(reduce, "Noisy system spec (JSON)", "");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_error;
    }

    try {
        if (*stability) return cmd_stability(common);
        if (*lyap) return cmd_lyapunov(common);
        if (*norm_cmd) return cmd_norm(common, s_vector, csv, svg, samples);
        if (*ball) return cmd_ball_radius(common, no_sphere, csv, svg);
        if (*inverse) return cmd_inverse(common);
        if (*reduce) return cmd_reduce_noise(common);
    } catch (const Error& e) {
        std::cerr << "pswitch: " << e.what() << '\n';
        return exit_error;
    } catch (const std::exception& e) {
        std::cerr << "pswitch: " << e.what() << '\n';
        return exit_error;
    }
    return exit_error;
}
