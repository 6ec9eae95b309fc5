#include "cylfit/bestfit.hpp"

#include "cylfit/geometry.hpp"
#include "cylfit/numerics.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace cylfit {

namespace {

struct CenterState {
    Vector3d c;          // optimal axis point, c'u = 0
    double K = 0.0;      // orthogonality multiplier
    Vector3d y_u, y_s;   // V^-1 u and V^-1 s, reused by derivatives
    Vector3d s;          // sum_i x_i (u'B_i u)
    std::vector<double> b;  // b_i = u'B_i u
};

Eigen::LDLT<Matrix3d> covariance_factor(const PointSet& ps, const Moments& m) {
    if (!ps.full_rank)
        throw SingularCovariance("covariance is singular: point set is rank-deficient");
    Eigen::LDLT<Matrix3d> ldlt(m.V);
    if (ldlt.info() != Eigen::Success)
        throw SingularCovariance("covariance factorization failed");
    return ldlt;
}

// Solve the constrained least-variance axis point for direction u:
// the stationarity condition is  -(4/n) s + 8 V c = K u  with  c'u = 0,
// which fixes K = -(4/n) (u'V^-1 s)/(u'V^-1 u) and c in closed form.
CenterState center_state(const Vector3d& u, const PointSet& ps, const Moments& m,
                         const Eigen::LDLT<Matrix3d>& v_ldlt) {
    const int n = ps.n();
    CenterState st;
    st.b.resize(static_cast<size_t>(n));
    st.s.setZero();
    for (int i = 0; i < n; ++i) {
        st.b[static_cast<size_t>(i)] = u.dot(m.B[static_cast<size_t>(i)] * u);
        st.s += ps.points[static_cast<size_t>(i)] * st.b[static_cast<size_t>(i)];
    }
    st.y_u = v_ldlt.solve(u);
    st.y_s = v_ldlt.solve(st.s);
    const double q = u.dot(st.y_u);
    const double p = u.dot(st.y_s);
    const double inv_n = 1.0 / static_cast<double>(n);
    st.K = -4.0 * inv_n * p / q;
    st.c = (st.K * st.y_u + 4.0 * inv_n * st.y_s) / 8.0;
    return st;
}

double objective_at(const PointSet& ps, const CenterState& st) {
    const int n = ps.n();
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const double r = st.b[static_cast<size_t>(i)] -
                         2.0 * st.c.dot(ps.points[static_cast<size_t>(i)]);
        sum += r * r;
    }
    return sum / static_cast<double>(n);
}

Vector3d gradient_at(const Vector3d& u, const PointSet& ps, const Moments& m,
                     const CenterState& st) {
    // envelope form: the c-dependence collapses to -K c because c is the
    // constrained optimum and (dc/du)'u = -c from differentiating c'u = 0
    const int n = ps.n();
    Vector3d g = Vector3d::Zero();
    for (int i = 0; i < n; ++i) {
        const double r = st.b[static_cast<size_t>(i)] -
                         2.0 * st.c.dot(ps.points[static_cast<size_t>(i)]);
        g += r * (m.B[static_cast<size_t>(i)] * u);
    }
    g *= 4.0 / static_cast<double>(n);
    g -= st.K * st.c;
    return g;
}

Matrix3d hessian_at(const Vector3d& u, const PointSet& ps, const Moments& m,
                    const CenterState& st, const Eigen::LDLT<Matrix3d>& v_ldlt) {
    const int n = ps.n();
    const double inv_n = 1.0 / static_cast<double>(n);

    Matrix3d ds = Matrix3d::Zero();  // ds/du, s = sum x_i (u'B_i u)
    for (int i = 0; i < n; ++i)
        ds += 2.0 * ps.points[static_cast<size_t>(i)] *
              (m.B[static_cast<size_t>(i)] * u).transpose();

    const double q = u.dot(st.y_u);
    const double p = u.dot(st.y_s);
    const Vector3d dp = st.y_s + ds.transpose() * st.y_u;
    const Vector3d dq = 2.0 * st.y_u;
    const Vector3d dK = -4.0 * inv_n * (q * dp - p * dq) / (q * q);
    const Matrix3d dc =
        v_ldlt.solve((u * dK.transpose() + st.K * Matrix3d::Identity() + 4.0 * inv_n * ds) / 8.0);

    Matrix3d h = Matrix3d::Zero();
    for (int i = 0; i < n; ++i) {
        const Vector3d bu = m.B[static_cast<size_t>(i)] * u;
        const Vector3d& x = ps.points[static_cast<size_t>(i)];
        const double r = st.b[static_cast<size_t>(i)] - 2.0 * st.c.dot(x);
        const Vector3d dr = 2.0 * bu - 2.0 * dc.transpose() * x;
        h += bu * dr.transpose() + r * m.B[static_cast<size_t>(i)];
    }
    h *= 4.0 * inv_n;
    h -= st.c * dK.transpose() + st.K * dc;
    return 0.5 * (h + h.transpose());
}

}  // namespace

Vector3d optimal_center(const Vector3d& u, const PointSet& ps, const Moments& m) {
    const auto ldlt = covariance_factor(ps, m);
    return center_state(u, ps, m, ldlt).c;
}

double fit_objective(const Vector3d& u, const PointSet& ps, const Moments& m) {
    const auto ldlt = covariance_factor(ps, m);
    return objective_at(ps, center_state(u, ps, m, ldlt));
}

Vector3d fit_gradient(const Vector3d& u, const PointSet& ps, const Moments& m) {
    const auto ldlt = covariance_factor(ps, m);
    return gradient_at(u, ps, m, center_state(u, ps, m, ldlt));
}

Matrix3d fit_hessian(const Vector3d& u, const PointSet& ps, const Moments& m) {
    const auto ldlt = covariance_factor(ps, m);
    const CenterState st = center_state(u, ps, m, ldlt);
    return hessian_at(u, ps, m, st, ldlt);
}

FitResult fit_cylinder(const PointSet& ps, const SolverConfig& cfg) {
    const Moments m = compute_moments(ps);
    const auto ldlt = covariance_factor(ps, m);
    const double scale2 = m.V.trace();              // mean squared point norm
    const double obj_floor = 1e-28 * scale2 * scale2;
    const double grad_floor = 1e-10 * scale2 * scale2;

    FitResult best;
    bool have_best = false;

    const double damping0 = std::clamp(cfg.step_damping, 1e-6, 1.0);
    for (double damping = damping0; damping > 0.1 * damping0; damping *= 0.5) {
        int converged_count = 0;
        FitResult ladder_best;
        bool ladder_have = false;

        for (int start = 0; start < cfg.n_starts; ++start) {
            Rng rng = Rng::for_start(cfg.seed, static_cast<std::uint64_t>(start));
            Vector3d u = random_unit_vector(rng);
            CenterState st = center_state(u, ps, m, ldlt);
            double f = objective_at(ps, st);
            bool converged = false;

            for (int it = 0; it < cfg.max_iter; ++it) {
                const Vector3d g = gradient_at(u, ps, m, st);
                const auto [e1, e2] = plane_basis(u);
                const Eigen::Vector2d gt(g.dot(e1), g.dot(e2));
                if (gt.norm() <= grad_floor || f <= obj_floor) {
                    converged = true;
                    break;
                }

                const Matrix3d h = hessian_at(u, ps, m, st, ldlt);
                Eigen::Matrix2d ht;
                ht << e1.dot(h * e1), e1.dot(h * e2), e2.dot(h * e1), e2.dot(h * e2);
                ht = 0.5 * (ht + ht.transpose()).eval();

                Eigen::Vector2d dt;
                const double det = ht.determinant();
                bool newton_ok = std::abs(det) > 1e-30;
                if (newton_ok) {
                    dt = ht.inverse() * (-gt);
                    if (dt.dot(gt) >= 0.0) newton_ok = false;  // not a descent direction
                }
                if (!newton_ok) dt = -gt / std::max(gt.norm(), 1e-300);

                // backtracking on the renormalized iterate
                double alpha = damping;
                bool accepted = false;
                double f_new = f;
                Vector3d u_new = u;
                for (int halve = 0; halve < 20; ++halve) {
                    u_new = (u + alpha * (dt(0) * e1 + dt(1) * e2)).normalized();
                    CenterState st_new = center_state(u_new, ps, m, ldlt);
                    f_new = objective_at(ps, st_new);
                    if (f_new <= f + 1e-4 * alpha * dt.dot(gt) + 1e-13 * std::abs(f)) {
                        st = st_new;
                        accepted = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if (!accepted) break;  // stuck; gradient floor above decides next round

                const double rel = std::abs(f_new - f) / std::max(f_new + f, 1e-300);
                u = u_new;
                f = f_new;
                if (rel <= cfg.tol_rel) {
                    converged = true;
                    break;
                }
            }

            if (!converged) continue;
            ++converged_count;
            if (!ladder_have || f < ladder_best.variance) {
                ladder_have = true;
                ladder_best.variance = f;
                const Vector3d c = center_state(u, ps, m, ldlt).c;
                const double rho2 =
                    std::max(0.0, m.V.trace() - u.dot(m.V * u) + c.squaredNorm());
                ladder_best.cylinder = make_cylinder(u, c, std::sqrt(rho2));
            }
        }

        if (converged_count > 0) {
            ladder_best.n_starts_converged = converged_count;
            best = ladder_best;
            have_best = true;
            break;
        }
    }

    if (!have_best)
        throw NoConvergence("no best-fit start converged, even with reduced step damping");
    const double circ_scale = m.V.trace();
    best.is_circumscribed = best.variance <= 1e-16 * circ_scale * circ_scale;
    return best;
}

}  // namespace cylfit
