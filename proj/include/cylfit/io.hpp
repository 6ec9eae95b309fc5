#pragma once

#include "cylfit/types.hpp"

#include <json.hpp>

#include <string>

namespace cylfit {

// A parsed point file.  CSV rows are `x,y,z` with an optional label column
// and `#` comments; JSON files are a bare array of [x,y,z] triplets.
struct PointFile {
    std::string format;                // "csv" or "json"
    std::vector<Vector3d> points;
    std::vector<std::string> labels;   // empty, or one entry per point
};

// Parse text in the given format ("csv", "json", or "auto" to sniff).
// Errors carry 1-based line numbers (CSV) or element indices (JSON).
PointFile parse_point_text(const std::string& text, const std::string& format_hint);

// Read and parse a point file; the format is taken from the extension,
// falling back to content sniffing.
PointFile read_point_file(const std::string& path);

// Canonical direction sign for reports: first nonzero component positive.
Vector3d first_nonzero_positive(const Vector3d& u);

// Shortest text form of v that parses back to exactly the same double.
std::string format_double(double v);

// One reported cylinder.  axis_point is in the ORIGINAL (uncentered) input
// frame, perpendicular to the direction; the direction sign follows
// first_nonzero_positive.
struct CylinderRecord {
    Vector3d direction = Vector3d::UnitZ();
    Vector3d axis_point = Vector3d::Zero();
    double radius = 0.0;
    ResidualProfile residuals;
    std::vector<int> support;          // original point indices; empty if n/a
    bool has_local_min_flag = false;
    bool is_local_min = false;
    bool has_objective = false;
    double objective = 0.0;
};

// The structured result of one CLI command.
struct ResultDocument {
    std::string command;
    int n = 0;
    int hull_size = -1;                // -1: not computed for this command
    Vector3d centroid = Vector3d::Zero();
    std::vector<CylinderRecord> cylinders;
    std::string verdict;               // empty when not applicable
    nlohmann::ordered_json diagnostics = nlohmann::ordered_json::object();
    double elapsed_seconds = 0.0;
    SolverConfig config;
};

// Build a cylinder record from a solver-frame cylinder: shifts the axis
// point back by the centroid, re-anchors it perpendicular to the axis and
// applies the reporting sign convention.  Residuals are computed against
// the original points.
CylinderRecord make_record(const Cylinder& cyl, const Vector3d& centroid,
                           const std::vector<Vector3d>& original_points);

// Deterministic renderings: JSON object (insertion-ordered keys) and an
// aligned text table.  Both are byte-stable for a fixed document apart
// from the timing field.
nlohmann::ordered_json to_json(const ResultDocument& doc);
std::string render_text(const ResultDocument& doc);
std::string render(const ResultDocument& doc, const std::string& format);

}  // namespace cylfit
