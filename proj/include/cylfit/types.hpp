/**
 * @file types.hpp
 * @brief Core value types and error types shared by all cylfit modules.
 */
#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <string>
#include <vector>

namespace cylfit {

using Eigen::Matrix3d;
using Eigen::Vector3d;

// ===== point sets ==========================================================

/// A 3D point cloud, stored mean-centered together with the removed centroid.
struct PointSet {
    std::vector<Vector3d> points;    ///< centered coordinates (sum ~ 0)
    Vector3d centroid_offset;        ///< original centroid; add back to leave the centered frame
    int rank = 0;                    ///< numerical rank of the centered coordinates (0..3)
    bool full_rank = false;          ///< rank == 3 with sigma_min/sigma_max > 1e-10
    double sv_max = 0.0;             ///< largest singular value of the centered n x 3 matrix
    double sv_min = 0.0;             ///< smallest singular value

    int n() const { return static_cast<int>(points.size()); }
};

/// Second-moment summaries of a centered point set.
struct Moments {
    Matrix3d T;                 ///< sum_i x_i x_i'
    Matrix3d V;                 ///< T / n
    Matrix3d W;                 ///< I*tr(T) - T
    std::vector<Matrix3d> B;    ///< B_i = I*tr(V_i - V) - (V_i - V), V_i = x_i x_i'
};

// ===== cylinders ===========================================================

/// An infinite circular cylinder: axis {c + t*u}, radius rho.
/// u is unit and c is kept orthogonal to u (c is the projection of the
/// frame origin onto the axis), so the representation is canonical up to
/// the sign of u.
struct Cylinder {
    Vector3d u = Vector3d::UnitZ();  ///< unit axis direction
    Vector3d c = Vector3d::Zero();   ///< axis point with c'u = 0
    double rho = 0.0;                ///< radius >= 0
};

/// Per-point squared axis distances of a point set against a cylinder.
struct ResidualProfile {
    std::vector<double> delta;  ///< delta_i = squared distance of x_i to the axis
    double mean = 0.0;          ///< mean of delta_i
    double stdev = 0.0;         ///< population standard deviation of delta_i
    double max_dev = 0.0;       ///< max_i |delta_i - rho^2|
};

// ===== solver configuration ================================================

/// Shared knobs for the iterative solvers. Defaults are the pinned release
/// values; tests and the CLI may override.
struct SolverConfig {
    double tol_rel = 1e-10;     ///< relative objective-change stopping threshold
    double tol_orth = 1e-10;    ///< |cos(axis, center)| feasibility threshold
    int max_iter = 100;         ///< Newton iteration cap per start
    int n_starts = 100;         ///< multi-start count
    std::uint64_t seed = 12345; ///< RNG seed; per-start streams derive from (seed, index)
    double step_damping = 1.0;  ///< initial step scale in (0, 1]; retried smaller on failure
};

// ===== numerics value types ================================================

/// Eigendecomposition of a symmetric 3x3 matrix, eigenvalues descending.
struct Spectrum3 {
    Vector3d eigenvalues;       ///< mu_1 >= mu_2 >= mu_3
    Matrix3d eigenvectors;      ///< orthogonal, columns in eigenvalue order, det = +1
};

/// Real roots of a real polynomial, ascending and deduplicated.
struct RealRoots {
    std::vector<double> roots;
    int degree = 0;             ///< effective degree after trimming tiny leading terms
};

// ===== results =============================================================

/// Output of the best-fit solver.
struct FitResult {
    Cylinder cylinder;
    double variance = 0.0;      ///< minimized variance of the squared axis distances
    int n_starts_converged = 0;
    bool is_circumscribed = false;  ///< variance consistent with all points on the surface
};

/// One stationary solution of the four-point problem.
struct StationaryCylinder {
    Cylinder cylinder;
    double objective = 0.0;     ///< homogeneous quartic value (= 4 rho^2 at the solution)
    bool is_local_min = false;  ///< objective rises along feasible test perturbations
    int hits = 0;               ///< number of starts that converged here
};

/// All distinct converged stationary cylinders through four points.
struct LocalMinSet {
    std::vector<StationaryCylinder> minima;  ///< sorted by radius ascending
    int attempts = 0;
    int converged = 0;
    bool too_many_warning = false;  ///< more distinct local minima than the theoretical bound
};

/// Existence classification for the five-point problem.
enum class Verdict {
    Solutions,                  ///< the indefinite case; up to six cylinders
    NoneDefinite,               ///< M or -M positive definite: no cylinder exists
    DegenerateDuplicatePoints,  ///< M ~ 0: two input points coincide
};

/// Diagnostics of the five-point algebraic reduction.
struct FivePointReduction {
    Eigen::Matrix<double, 5, 1> t;  ///< vector orthogonal to the columns of X and to 1, t't = 5
    Matrix3d M;                     ///< sum_i t_i B_i
    Spectrum3 spectrum;             ///< eigenvalues/vectors of M
    double alpha2 = 0.0;            ///< rotation angle that zeroes the (3,3) quadric entry
    std::vector<double> poly;       ///< ascending coefficients of the reduced polynomial
};

/// Cylinders through five points plus the reduction that produced them.
struct CircumscribedSet {
    std::vector<Cylinder> cylinders;    ///< 0..6, deduplicated, radius ascending
    Verdict verdict = Verdict::Solutions;
    FivePointReduction reduction;
};

/// Feasible squared-component intervals for five-point solution directions.
struct ComponentBounds {
    // bounds[k] = {lo, hi} for u_k^2 in the eigenbasis of M
    std::array<std::pair<double, double>, 3> bounds;
};

/// Result of the smallest enclosing cylinder search.
struct EnclosingResult {
    Cylinder cylinder;
    std::vector<int> support;   ///< indices of the contact points, ascending
    int k = 0;                  ///< support cardinality class (1..5)
    int hull_size = 0;
    int candidates_examined = 0;
    int subset_failures = 0;    ///< subset solves skipped for degeneracy/non-convergence
};

// ===== errors ==============================================================

/// Base class for all cylfit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SingularCovariance : Error { using Error::Error; };
struct SingularT : Error { using Error::Error; };
struct RankDeficient : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct AllCoefficientsZero : Error { using Error::Error; };
struct EigenTies : Error { using Error::Error; };
struct CollinearPoints : Error { using Error::Error; };
struct NoCandidateFound : Error { using Error::Error; };

/// Two input points coincide; carries the offending pair.
struct DegenerateDuplicatePoints : Error {
    int first, second;
    DegenerateDuplicatePoints(const std::string& msg, int i, int j)
        : Error(msg), first(i), second(j) {}
};

}  // namespace cylfit
