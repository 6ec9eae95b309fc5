/**
 * @file io.cpp
 * @brief Point-file parsing (CSV / JSON) and result-document rendering.
 */
#include "cylfit/io.hpp"

#include "cylfit/geometry.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace cylfit {

namespace {

std::string trimmed(const std::string& s) {
    std::size_t lo = 0;
    std::size_t hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

double parse_number(const std::string& token, int lineno) {
    const std::string t = trimmed(token);
    if (t.empty())
        throw Error("line " + std::to_string(lineno) + ": empty numeric field");
    const char* begin = t.c_str();
    char* end = nullptr;
    const double v = std::strtod(begin, &end);
    if (end != begin + t.size())
        throw Error("line " + std::to_string(lineno) + ": cannot parse number '" + t + "'");
    if (!std::isfinite(v))
        throw Error("line " + std::to_string(lineno) + ": non-finite value '" + t + "'");
    return v;
}

PointFile parse_csv(const std::string& text) {
    PointFile pf;
    pf.format = "csv";
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    bool any_label = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string body = trimmed(line);
        if (body.empty() || body.front() == '#') continue;

        std::vector<std::string> fields;
        std::string field;
        std::istringstream row(body);
        while (std::getline(row, field, ',')) fields.push_back(field);
        if (!body.empty() && body.back() == ',') fields.push_back("");
        if (fields.size() < 3 || fields.size() > 4)
            throw Error("line " + std::to_string(lineno) + ": expected x,y,z[,label], got " +
                        std::to_string(fields.size()) + " fields");

        pf.points.emplace_back(parse_number(fields[0], lineno), parse_number(fields[1], lineno),
                               parse_number(fields[2], lineno));
        if (fields.size() == 4) {
            pf.labels.push_back(trimmed(fields[3]));
            any_label = true;
        } else {
            pf.labels.emplace_back();
        }
    }
    if (!any_label) pf.labels.clear();
    return pf;
}

PointFile parse_json_points(const std::string& text) {
    PointFile pf;
    pf.format = "json";
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(std::string("JSON parse error: ") + e.what());
    }
    if (!j.is_array())
        throw Error("top-level JSON value must be an array of [x,y,z] points");
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& entry = j[i];
        const std::string where = "point " + std::to_string(i + 1);
        if (!entry.is_array() || entry.size() != 3)
            throw Error(where + ": expected an array of exactly 3 numbers");
        Vector3d p;
        for (int k = 0; k < 3; ++k) {
            if (!entry[k].is_number())
                throw Error(where + ": coordinate " + std::to_string(k + 1) + " is not a number");
            p(k) = entry[k].get<double>();
            if (!std::isfinite(p(k)))
                throw Error(where + ": coordinate " + std::to_string(k + 1) + " is not finite");
        }
        pf.points.push_back(p);
    }
    return pf;
}

nlohmann::ordered_json json_vec3(const Vector3d& v) {
    return nlohmann::ordered_json::array({v.x(), v.y(), v.z()});
}

}  // namespace

PointFile parse_point_text(const std::string& text, const std::string& format_hint) {
    std::string fmt = format_hint;
    if (fmt == "auto") {
        fmt = "csv";
        for (const char ch : text) {
            if (std::isspace(static_cast<unsigned char>(ch))) continue;
            if (ch == '[') fmt = "json";
            break;
        }
    }
    PointFile pf;
    if (fmt == "csv")
        pf = parse_csv(text);
    else if (fmt == "json")
        pf = parse_json_points(text);
    else
        throw Error("unknown point file format '" + format_hint + "'");
    if (pf.points.empty()) throw Error("no points found in input");
    return pf;
}

PointFile read_point_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();

    std::string hint = "auto";
    const auto dot = path.find_last_of('.');
    if (dot != std::string::npos) {
        const std::string ext = path.substr(dot + 1);
        if (ext == "json") hint = "json";
        if (ext == "csv") hint = "csv";
    }
    return parse_point_text(buf.str(), hint);
}

Vector3d first_nonzero_positive(const Vector3d& u) {
    for (int i = 0; i < 3; ++i) {
        if (u(i) > 0.0) return u;
        if (u(i) < 0.0) return Vector3d(-u);
    }
    return u;
}

std::string format_double(double v) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "nan");
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

CylinderRecord make_record(const Cylinder& cyl, const Vector3d& centroid,
                           const std::vector<Vector3d>& original_points) {
    CylinderRecord rec;
    const Cylinder original =
        make_cylinder(first_nonzero_positive(cyl.u), cyl.c + centroid, cyl.rho);
    rec.direction = original.u;
    rec.axis_point = original.c;
    rec.radius = original.rho;
    rec.residuals = residual_profile(original_points, original);
    return rec;
}

nlohmann::ordered_json to_json(const ResultDocument& doc) {
    nlohmann::ordered_json j;
    j["command"] = doc.command;

    nlohmann::ordered_json input;
    input["n"] = doc.n;
    if (doc.hull_size >= 0) input["hull_size"] = doc.hull_size;
    input["centroid"] = json_vec3(doc.centroid);
    j["input_summary"] = input;

    nlohmann::ordered_json cyls = nlohmann::ordered_json::array();
    for (const auto& rec : doc.cylinders) {
        nlohmann::ordered_json c;
        c["direction"] = json_vec3(rec.direction);
        c["axis_point"] = json_vec3(rec.axis_point);
        c["radius"] = rec.radius;
        c["residual_stats"] = {{"mean", rec.residuals.mean},
                               {"stdev", rec.residuals.stdev},
                               {"max_dev", rec.residuals.max_dev}};
        if (!rec.support.empty()) c["support"] = rec.support;
        if (rec.has_local_min_flag) c["is_local_min"] = rec.is_local_min;
        if (rec.has_objective) c["objective"] = rec.objective;
        cyls.push_back(std::move(c));
    }
    j["cylinders"] = cyls;

    if (!doc.verdict.empty()) j["verdict"] = doc.verdict;
    if (!doc.diagnostics.empty()) j["diagnostics"] = doc.diagnostics;
    j["timing"] = {{"seconds", doc.elapsed_seconds}};
    j["config"] = {{"seed", doc.config.seed},         {"tol_rel", doc.config.tol_rel},
                   {"tol_orth", doc.config.tol_orth}, {"n_starts", doc.config.n_starts},
                   {"max_iter", doc.config.max_iter}, {"step_damping", doc.config.step_damping}};
    return j;
}

std::string render_text(const ResultDocument& doc) {
    std::ostringstream out;
    const auto row = [&](const std::string& label, const std::string& value) {
        out << label;
        for (std::size_t i = label.size(); i < 16; ++i) out << ' ';
        out << value << '\n';
    };
    const auto vec3 = [](const Vector3d& v) {
        return format_double(v.x()) + " " + format_double(v.y()) + " " + format_double(v.z());
    };

    row("command", doc.command);
    row("points", std::to_string(doc.n));
    if (doc.hull_size >= 0) row("hull size", std::to_string(doc.hull_size));
    row("centroid", vec3(doc.centroid));
    if (!doc.verdict.empty()) row("verdict", doc.verdict);
    row("cylinders", std::to_string(doc.cylinders.size()));

    for (std::size_t i = 0; i < doc.cylinders.size(); ++i) {
        const auto& rec = doc.cylinders[i];
        out << "cylinder " << (i + 1) << '\n';
        row("  direction", vec3(rec.direction));
        row("  axis point", vec3(rec.axis_point));
        row("  radius", format_double(rec.radius));
        row("  res mean", format_double(rec.residuals.mean));
        row("  res stdev", format_double(rec.residuals.stdev));
        row("  res max dev", format_double(rec.residuals.max_dev));
        if (!rec.support.empty()) {
            std::string s;
            for (const int idx : rec.support) s += (s.empty() ? "" : " ") + std::to_string(idx);
            row("  support", s);
        }
        if (rec.has_local_min_flag) row("  local min", rec.is_local_min ? "yes" : "no");
        if (rec.has_objective) row("  objective", format_double(rec.objective));
    }

    if (!doc.diagnostics.empty()) row("diagnostics", doc.diagnostics.dump());
    row("time", format_double(doc.elapsed_seconds) + " s");
    row("config", "seed=" + std::to_string(doc.config.seed) +
                      " tol_rel=" + format_double(doc.config.tol_rel) +
                      " tol_orth=" + format_double(doc.config.tol_orth) +
                      " starts=" + std::to_string(doc.config.n_starts) +
                      " max_iter=" + std::to_string(doc.config.max_iter) +
                      " damping=" + format_double(doc.config.step_damping));
    return out.str();
}

std::string render(const ResultDocument& doc, const std::string& format) {
    if (format == "json") return to_json(doc).dump(2) + "\n";
    if (format == "text") return render_text(doc);
    throw Error("unknown output format '" + format + "' (expected json or text)");
}

}  // namespace cylfit
