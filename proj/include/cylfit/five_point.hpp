#pragma once

#include "cylfit/types.hpp"

namespace cylfit {

using Vector5d = Eigen::Matrix<double, 5, 1>;

// The direction orthogonal to the columns of the centered coordinate matrix X
// and to the all-ones vector, normalized to t't = 5, with the sign chosen so
// the largest-magnitude entry is positive (first such entry on ties).
// Throws RankDeficient when the points do not span 3D.
Vector5d compute_t(const PointSet& ps);

// M = sum_i t_i B_i, equivalently I*tr(X'ΘX) - X'ΘX with Θ = diag(t).  A unit
// direction u admits a cylinder circumscribing all five points only if
// u'Mu = 0.
Matrix3d compute_M(const PointSet& ps, const Moments& m, const Vector5d& t);

// Existence classification from the spectrum of M (eigenvalues descending)
// and the trace of the scatter matrix T: M vanishing relative to tr(T)
// signals a duplicated point; a definite M (after zeroing eigenvalues below
// 1e-10 of the spectral norm) excludes solutions.
Verdict existence_verdict(const Spectrum3& spectrum, double trace_t);

// gamma(u) = T^-1 X' b with b_i = (u'u)*tr(V_i) - u'V_i u, a homogeneous
// quadratic in u.  Where u'Mu = 0, gamma equals twice the axis point of the
// circumscribing cylinder with direction u, and the remaining compatibility
// condition is the homogeneous cubic u'gamma(u) = 0.
Vector3d cubic_gamma(const Vector3d& u, const PointSet& ps, const Moments& m);

// Interval bounds for the squared components (in the eigenbasis of M) of any
// direction with u'Mu = 0.  Requires a separated spectrum; throws EigenTies
// otherwise, in which case callers skip this filter.
ComponentBounds component_bounds(const Spectrum3& spectrum);

// All cylinders circumscribed to a full-rank 5-point set: builds t and M,
// classifies existence, reduces {u'Mu = 0, u'gamma(u) = 0, |u| = 1} to a
// univariate polynomial of degree <= 6 in a rotated frame, polishes each
// candidate by a few Newton steps, and validates the five boundary residuals.
// Duplicate points yield verdict DegenerateDuplicatePoints; a definite M
// yields NoneDefinite with no cylinders.
CircumscribedSet circumscribed_5(const PointSet& ps, const SolverConfig& cfg);

}  // namespace cylfit
