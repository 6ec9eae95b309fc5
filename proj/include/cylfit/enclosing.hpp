#pragma once

#include "cylfit/types.hpp"

#include <utility>

namespace cylfit {

// Indices (ascending) of the points that are vertices of the convex hull.
// Duplicate clusters are represented by their lowest index; points provably
// inside the hull of the others are dropped, borderline cases are kept.
// Works for full-rank, planar, collinear and coincident inputs alike.
std::vector<int> hull_vertices(const PointSet& ps);

// Minimum Euclidean distance from p to the convex hull of cloud (exactly 0
// when p lies inside).  Iterative minimum-norm-point search; the result is
// an upper bound that is tight to ~1e-12 of the cloud scale.
double distance_to_hull(const Vector3d& p, const std::vector<Vector3d>& cloud);

// Smallest cylinder through three points: radius is half the smallest
// triangle height, axis parallel to the corresponding side, lying in the
// triangle plane midway between that side and the opposite vertex.
// Collinear or coincident triples degenerate to a zero-radius axis through
// the points.
Cylinder triangle_min_cylinder(const Vector3d& a, const Vector3d& b, const Vector3d& c);

// Does the cylinder contain every point of ps (within the pinned relative
// slack 1e-9 on the squared radius)?  Second member: the worst signed excess
// max_i (delta_i - rho^2), normalized by the squared point scale.
std::pair<bool, double> enclosure_check(const Cylinder& cyl, const PointSet& ps);

// Smallest enclosing cylinder: prunes to hull vertices, enumerates the
// cylinders circumscribed to k = 1..5 hull points at stationary radius, and
// returns the smallest enclosing candidate (ties: smaller k, then
// lexicographic support).  Throws NoCandidateFound only if every candidate
// solve failed numerically.
EnclosingResult smallest_enclosing_cylinder(const PointSet& ps, const SolverConfig& cfg);

// Independent upper-bound oracle: sweeps a direction grid (prefix-nested
// spiral of the given resolution, plus the principal directions of the
// cloud), solves the exact 2D smallest enclosing circle of the projections
// per direction, and returns the smallest radius found.  Monotone in the
// resolution by construction: the grid for R is a prefix of the grid for
// any larger resolution.
double oracle_enclosing_radius(const PointSet& ps, int grid_resolution);

// Exact smallest enclosing circle of 2D points (deterministic randomized
// incremental solve).
struct Circle2 {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    double radius = 0.0;
};
Circle2 smallest_enclosing_circle(const std::vector<Eigen::Vector2d>& pts);

}  // namespace cylfit
