/**
 * @file bestfit.hpp
 * @brief Best-fitting cylinder: minimize the variance of the squared axis
 *        distances over the direction sphere, with the axis point solved
 *        in closed form for each direction.
 */
#pragma once

#include "cylfit/types.hpp"

namespace cylfit {

/// Variance-minimizing axis point for direction u, constrained to c'u = 0.
/// The orthogonality multiplier is fixed in closed form by that constraint.
/// Requires a full-rank point set (V invertible); throws SingularCovariance.
Vector3d optimal_center(const Vector3d& u, const PointSet& ps, const Moments& m);

/// Variance of the squared axis distances at (u, optimal_center(u)).
/// Homogeneous of degree 4 in u (u need not be unit).
double fit_objective(const Vector3d& u, const PointSet& ps, const Moments& m);

/// Analytic gradient of fit_objective with respect to u, including the
/// dependence of the optimal center on u (envelope form).
Vector3d fit_gradient(const Vector3d& u, const PointSet& ps, const Moments& m);

/// Analytic Hessian of fit_objective with respect to u.
Matrix3d fit_hessian(const Vector3d& u, const PointSet& ps, const Moments& m);

/// Multi-start damped Newton minimization of fit_objective on the unit
/// sphere. Throws NoConvergence if no start converges after damping retries.
FitResult fit_cylinder(const PointSet& ps, const SolverConfig& cfg);

}  // namespace cylfit
