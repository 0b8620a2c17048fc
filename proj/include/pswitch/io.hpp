#pragma once

#include <pswitch/applications.hpp>
#include <pswitch/barabanov.hpp>
#include <pswitch/control_set.hpp>
#include <pswitch/errors.hpp>
#include <pswitch/linalg.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace pswitch::io {

/// Shortest round-tripping decimal form, independent of the locale.
[[nodiscard]] inline std::string format_number(double v) {
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

[[nodiscard]] inline double parse_number(std::string_view text) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc{} || res.ptr != text.data() + text.size() || !std::isfinite(v))
        throw Error(ErrorCode::Parse, "not a finite number: '" + std::string(text) + "'");
    return v;
}

[[nodiscard]] inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open " + path.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
    out << content;
}

namespace detail {

using nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& where, const std::string& what) {
    throw Error(ErrorCode::Parse, where + ": " + what);
}

inline const json& field(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) schema_error("spec", std::string("missing field '") + key + "'");
    return *it;
}

inline double number_at(const json& v, const std::string& where) {
    if (!v.is_number()) schema_error(where, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) schema_error(where, "expected a finite number");
    return d;
}

inline Mat2 matrix_at(const json& v, const std::string& where) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_array() || !v[1].is_array() || v[0].size() != 2 || v[1].size() != 2)
        schema_error(where, "expected a 2x2 array [[a, b], [c, d]]");
    return Mat2{number_at(v[0][0], where + "[0][0]"), number_at(v[0][1], where + "[0][1]"),
                number_at(v[1][0], where + "[1][0]"), number_at(v[1][1], where + "[1][1]")};
}

inline std::vector<Mat2> matrix_list(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) schema_error(where, "expected a nonempty list of 2x2 arrays");
    std::vector<Mat2> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(matrix_at(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

inline double radius_at(const json& obj, const std::string& where) {
    const double r = number_at(field(obj, "radius"), where + ".radius");
    if (r < 0.0) schema_error(where + ".radius", "must be nonnegative");
    return r;
}

inline nlohmann::ordered_json matrix_json(const Mat2& m) {
    using oj = nlohmann::ordered_json;
    return oj::array({oj::array({m.a11, m.a12}), oj::array({m.a21, m.a22})});
}

/// 1-based line and column of a byte offset.
inline std::pair<std::size_t, std::size_t> line_column(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace detail

/// Control set from a JSON spec:
///   {"kind": "finite", "matrices": [[[a, b], [c, d]], ...]}
///   {"kind": "frobenius_ball", "center": [[a, b], [c, d]], "radius": r}
///   {"kind": "noisy", "matrices": [...], "noise": {"type": "frobenius", "radius": r}
///                                        | {"type": "elementwise", "bounds": [[..], [..]]}
///                                        | {"type": "polytope", "matrices": [...]}}
[[nodiscard]] inline ControlSet parse_spec(std::string_view text) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [line, col] = detail::line_column(text, e.byte == 0 ? 0 : e.byte - 1);
        std::string msg = e.what();
        if (const auto pos = msg.find("parse error"); pos != std::string::npos) msg = msg.substr(pos);
        throw Error(ErrorCode::Parse, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " + msg);
    }
    if (!doc.is_object()) detail::schema_error("spec", "top level must be an object");
    const json& kind = detail::field(doc, "kind");
    if (!kind.is_string()) detail::schema_error("kind", "expected a string");
    const std::string k = kind.get<std::string>();
    try {
        if (k == "finite") return ControlSet::finite(detail::matrix_list(detail::field(doc, "matrices"), "matrices"));
        if (k == "frobenius_ball")
            return ControlSet::frobenius_ball(detail::matrix_at(detail::field(doc, "center"), "center"),
                                              detail::radius_at(doc, "spec"));
        if (k == "noisy") {
            const auto base = detail::matrix_list(detail::field(doc, "matrices"), "matrices");
            const json& noise = detail::field(doc, "noise");
            if (!noise.is_object()) detail::schema_error("noise", "expected an object");
            const json& type = detail::field(noise, "type");
            const std::string t = type.is_string() ? type.get<std::string>() : std::string();
            if (t == "frobenius") return reduce_noisy(base, NoiseModel::frobenius(detail::radius_at(noise, "noise")));
            if (t == "elementwise")
                return reduce_noisy(base, NoiseModel::elementwise(detail::matrix_at(detail::field(noise, "bounds"), "noise.bounds")));
            if (t == "polytope")
                return reduce_noisy(base, NoiseModel::polytope(detail::matrix_list(detail::field(noise, "matrices"), "noise.matrices")));
            detail::schema_error("noise.type", "expected frobenius, elementwise or polytope");
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Parse) throw;
        throw Error(ErrorCode::Parse, std::string("invalid spec: ") + e.what());
    }
    detail::schema_error("kind", "expected finite, frobenius_ball or noisy, got '" + k + "'");
}

[[nodiscard]] inline ControlSet load_spec(const std::filesystem::path& path) { return parse_spec(read_file(path)); }

/// JSON spec of a set; parse_spec reads it back exactly.
[[nodiscard]] inline std::string spec_json(const ControlSet& set) {
    nlohmann::ordered_json doc;
    switch (set.kind()) {
        case ControlSet::Kind::Finite: {
            doc["kind"] = "finite";
            doc["matrices"] = nlohmann::ordered_json::array();
            for (const Mat2& m : set.generators()) doc["matrices"].push_back(detail::matrix_json(m));
            break;
        }
        case ControlSet::Kind::FrobeniusBall:
            doc["kind"] = "frobenius_ball";
            doc["center"] = detail::matrix_json(set.center());
            doc["radius"] = set.radius();
            break;
        case ControlSet::Kind::NoisySum: {
            doc["kind"] = "noisy";
            doc["matrices"] = nlohmann::ordered_json::array();
            for (const Mat2& m : set.generators()) doc["matrices"].push_back(detail::matrix_json(m));
            doc["noise"] = nlohmann::ordered_json{{"type", "frobenius"}, {"radius", set.radius()}};
            break;
        }
    }
    return doc.dump(2) + "\n";
}

/// Rows (x1, x2) of a polygon; a first line that is not numeric is taken as a header.
[[nodiscard]] inline std::vector<Vec2> parse_polygon_csv(std::string_view text) {
    std::vector<Vec2> out;
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
            if (out.empty() && line_no == 1) continue;
            throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected two comma-separated values");
        }
        try {
            out.push_back({parse_number(std::string_view(line).substr(0, comma)),
                           parse_number(std::string_view(line).substr(comma + 1))});
        } catch (const Error& e) {
            if (line_no == 1) continue;
            throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

/// Checks that rows (theta, x1, x2) sampled at ascending angles over a full turn form
/// a closed convex curve symmetric about the origin.
inline void validate_polyline(const std::vector<std::array<double, 3>>& rows, double rel_tol = 1e-9) {
    const std::size_t n = rows.size();
    if (n < 4 || n % 2 != 0) throw Error(ErrorCode::InvalidPolygon, "polyline needs an even number of points");
    double scale = 0.0;
    for (const auto& r : rows) scale = std::max(scale, std::hypot(r[1], r[2]));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& p = rows[i];
        const auto& q = rows[(i + n / 2) % n];
        if (std::hypot(p[1] + q[1], p[2] + q[2]) > rel_tol * scale)
            throw Error(ErrorCode::InvalidPolygon, "polyline is not symmetric at row " + std::to_string(i));
        const auto& a = rows[(i + 1) % n];
        const auto& b = rows[(i + 2) % n];
        const Vec2 e1{a[1] - p[1], a[2] - p[2]}, e2{b[1] - a[1], b[2] - a[2]};
        if (cross(e1, e2) < -rel_tol * scale * (norm(e1) + norm(e2)))
            throw Error(ErrorCode::InvalidPolygon, "polyline is not convex at row " + std::to_string(i + 1));
    }
}

/// Rows of a polyline CSV with header theta,x1,x2.
[[nodiscard]] inline std::vector<std::array<double, 3>> parse_polyline_csv(std::string_view text) {
    std::vector<std::array<double, 3>> rows;
    std::size_t start = 0, line_no = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(start, end - start);
        start = end + 1;
        if (++line_no == 1 || line.empty()) continue;
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        if (c1 == std::string_view::npos || c2 == std::string_view::npos)
            throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": expected theta,x1,x2");
        rows.push_back({parse_number(line.substr(0, c1)), parse_number(line.substr(c1 + 1, c2 - c1 - 1)),
                        parse_number(line.substr(c2 + 1))});
    }
    return rows;
}

/// The curve at `rows` equally spaced angles as CSV, validated before it is returned.
[[nodiscard]] inline std::string polyline_csv(const SphereModel& sphere, int rows = 4096) {
    std::string out = "theta,x1,x2\n";
    for (int k = 0; k < rows; ++k) {
        const double theta = k * two_pi / rows;
        const Vec2 p = sphere.point(theta);
        out += format_number(theta);
        out += ',';
        out += format_number(p.x1);
        out += ',';
        out += format_number(p.x2);
        out += '\n';
    }
    validate_polyline(parse_polyline_csv(out));
    return out;
}

/// Closed SVG path of the curve in a view box centered at the origin with a 10% margin.
[[nodiscard]] inline std::string polyline_svg(const SphereModel& sphere, int rows = 4096) {
    std::vector<Vec2> pts;
    double extent = 0.0;
    for (int k = 0; k < rows; ++k) {
        pts.push_back(sphere.point(k * two_pi / rows));
        extent = std::max({extent, std::abs(pts.back().x1), std::abs(pts.back().x2)});
    }
    const double half = 1.1 * extent;
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" + format_number(-half) + ' ' +
                      format_number(-half) + ' ' + format_number(2 * half) + ' ' + format_number(2 * half) +
                      "\" width=\"512\" height=\"512\">\n";
    svg += "<line x1=\"" + format_number(-half) + "\" y1=\"0\" x2=\"" + format_number(half) +
           "\" y2=\"0\" stroke=\"#bbb\" stroke-width=\"" + format_number(half / 400) + "\"/>\n";
    svg += "<line x1=\"0\" y1=\"" + format_number(-half) + "\" x2=\"0\" y2=\"" + format_number(half) +
           "\" stroke=\"#bbb\" stroke-width=\"" + format_number(half / 400) + "\"/>\n";
    svg += "<path d=\"M";
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (i > 0) svg += " L";
        svg += ' ' + format_number(pts[i].x1) + ' ' + format_number(-pts[i].x2);
    }
    svg += " Z\" fill=\"none\" stroke=\"black\" stroke-width=\"" + format_number(half / 200) + "\"/>\n</svg>\n";
    return svg;
}

}  // namespace pswitch::io
