#pragma once

#include "cylfit/types.hpp"

namespace cylfit {

// Least-norm solution gamma of the circumscription system for axis direction
// u: with b_i = u'B_i u, gamma = T^-1 X' b.  For a centered full-rank 4-point
// set the system X gamma = b holds exactly, and gamma equals twice the axis
// point c that puts all four points at a common squared distance from the
// axis.  Throws SingularT if the scatter matrix T is not invertible.
Vector3d gamma_from_u(const Vector3d& u, const PointSet& ps, const Moments& m);

// Homogeneous quartic Q(u) = (u'u)(u'Wu) + gamma(u)'gamma(u).  At a unit u
// satisfying the orthogonality condition gamma'u = 0 this equals 4 rho^2 of
// the circumscribed cylinder with direction u.
double quartic_objective(const Vector3d& u, const PointSet& ps, const Moments& m);

// Analytic gradient and Hessian of the quartic above.
Vector3d quartic_gradient(const Vector3d& u, const PointSet& ps, const Moments& m);
Matrix3d quartic_hessian(const Vector3d& u, const PointSet& ps, const Moments& m);

// Outcome of one damped Newton step on the Lagrangian of the quartic with the
// orthogonality constraint restored to first order.
struct FourPointStep {
    Vector3d u_next;             // unit direction after the step
    double objective_next = 0.0; // quartic at u_next
    bool accepted = false;       // sufficient-decrease backtracking succeeded
    double cos_orth = 0.0;       // |cos(u_next, gamma(u_next))|; 0 when gamma ~ 0
    double rel_change = 0.0;     // |Q_next - Q| / (Q_next + Q)
};

// One iteration of the constrained Newton scheme.  Multipliers for the
// orthogonality and unit-norm constraints are fitted by least squares at u;
// the Newton step is projected so that the linearized orthogonality residual
// is cancelled while the predicted first-order decrease is preserved, then
// the iterate is renormalized.  step_scale is the initial backtracking step
// length (1.0 for the undamped scheme).
FourPointStep newton_restore_step(const Vector3d& u, const PointSet& ps, const Moments& m,
                                  double step_scale);

// Multi-start search for all stationary circumscribed cylinders of a
// full-rank 4-point set; locally minimal-radius ones are flagged.  Throws
// NoConvergence when no start converges even after step-damping retries.
LocalMinSet min_circumscribed_4(const PointSet& ps, const SolverConfig& cfg);

}  // namespace cylfit
