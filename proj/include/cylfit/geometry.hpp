/**
 * @file geometry.hpp
 * @brief Centering, second moments, axis distances and residual summaries.
 */
#pragma once

#include "cylfit/types.hpp"

namespace cylfit {

/// Translate raw points to their centroid and record the offset.
/// Also computes the numerical rank of the centered coordinate matrix
/// (full_rank uses the pinned threshold sigma_min/sigma_max > 1e-10).
PointSet center_points(const std::vector<Vector3d>& raw);

/// Second moments T = sum x_i x_i', V = T/n, W = I tr(T) - T and the
/// per-point deviation forms B_i = I tr(V_i - V) - (V_i - V).
/// Requires a centered point set.
Moments compute_moments(const PointSet& ps);

/// Squared distance of x from the line {c + t u}; u must be unit.
double axis_sq_distance(const Vector3d& x, const Vector3d& u, const Vector3d& c);
double axis_sq_distance(const Vector3d& x, const Cylinder& cyl);

/// Squared axis distances of every point plus mean / stdev / max |delta - rho^2|.
ResidualProfile residual_profile(const PointSet& ps, const Cylinder& cyl);
ResidualProfile residual_profile(const std::vector<Vector3d>& pts, const Cylinder& cyl);

/// Diagonal length of the axis-aligned bounding box (the "scale" used by
/// relative tolerances); 0 for empty or single-point sets.
double bounding_box_diameter(const std::vector<Vector3d>& pts);
double bounding_box_diameter(const PointSet& ps);

/// Canonicalize a cylinder: normalize u and slide c along the axis so c'u = 0.
Cylinder make_cylinder(const Vector3d& u, const Vector3d& c, double rho);

/// Angle in [0, pi/2] between the lines spanned by a and b (sign-insensitive).
double line_angle(const Vector3d& a, const Vector3d& b);

/// Deterministic orthonormal basis {e1, e2} of the plane orthogonal to unit u.
std::pair<Vector3d, Vector3d> plane_basis(const Vector3d& u);

/// Flip the sign of u, if needed, so its largest-magnitude component is
/// positive (first such component on ties); canonical representative of a
/// direction defined up to sign.
Vector3d sign_normalized(const Vector3d& u);

}  // namespace cylfit
