#pragma once

#include "cylfit/geometry.hpp"
#include "cylfit/numerics.hpp"
#include "cylfit/types.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <numbers>
#include <vector>

namespace testutil {

using cylfit::Cylinder;
using cylfit::Matrix3d;
using cylfit::PointSet;
using cylfit::Rng;
using cylfit::Vector3d;

// Regular tetrahedron with edge length 2*sqrt(2), centered at the origin.
inline std::vector<Vector3d> regular_tetrahedron() {
    return {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}};
}

// Two apexes at height +-h over an equilateral unit-circumradius triangle.
inline std::vector<Vector3d> bipyramid(double h) {
    const double s = std::sqrt(3.0) / 2.0;
    return {{0, 0, h}, {0, 0, -h}, {1, 0, 0}, {-0.5, s, 0}, {-0.5, -s, 0}};
}

inline Matrix3d random_rotation(Rng& rng) {
    const Vector3d axis = cylfit::random_unit_vector(rng);
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    return Eigen::AngleAxisd(angle, axis).toRotationMatrix();
}

inline std::vector<Vector3d> random_points(Rng& rng, int n, double lo = -1.0, double hi = 1.0) {
    std::vector<Vector3d> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i)
        pts.emplace_back(rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi));
    return pts;
}

// Draws until the centered coordinates have full numerical rank.
inline PointSet random_full_rank(Rng& rng, int n) {
    for (int attempt = 0; attempt < 200; ++attempt) {
        const PointSet ps = cylfit::center_points(random_points(rng, n));
        if (ps.full_rank) return ps;
    }
    throw std::runtime_error("random_full_rank: exhausted attempts");
}

inline Cylinder random_cylinder(Rng& rng, double rho_lo = 0.3, double rho_hi = 2.0) {
    const Vector3d u = cylfit::random_unit_vector(rng);
    const Vector3d c_raw(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    return cylfit::make_cylinder(u, c_raw, rng.uniform(rho_lo, rho_hi));
}

// n points exactly on the cylinder surface, angles jittered around an even
// fan so that no two coincide, axial offsets in [-z_spread, z_spread].
inline std::vector<Vector3d> sample_cylinder_surface(Rng& rng, const Cylinder& cyl, int n,
                                                     double z_spread = 1.0) {
    const auto [e1, e2] = cylfit::plane_basis(cyl.u);
    std::vector<Vector3d> pts;
    pts.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double theta = 2.0 * std::numbers::pi * (static_cast<double>(i) + 0.5 * rng.uniform()) /
                             static_cast<double>(n);
        const double z = rng.uniform(-z_spread, z_spread);
        pts.push_back(cyl.c + cyl.rho * (std::cos(theta) * e1 + std::sin(theta) * e2) + z * cyl.u);
    }
    return pts;
}

inline double polyval(const std::vector<double>& coeffs, double x) {
    double acc = 0.0;
    for (std::size_t k = coeffs.size(); k-- > 0;) acc = acc * x + coeffs[k];
    return acc;
}

}  // namespace testutil
