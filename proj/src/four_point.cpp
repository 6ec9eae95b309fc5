#include "cylfit/four_point.hpp"

#include "cylfit/geometry.hpp"
#include "cylfit/numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <tuple>
#include <vector>

namespace cylfit {

namespace {

using Matrix43 = Eigen::Matrix<double, 4, 3>;
using Matrix34 = Eigen::Matrix<double, 3, 4>;
using Vector4 = Eigen::Matrix<double, 4, 1>;

struct Context {
    const PointSet* ps = nullptr;
    const Moments* m = nullptr;
    Matrix43 X;       // stacked centered points
    Matrix34 G;       // T^-1 X'
    double scale_sq = 0.0;  // mean squared point norm; fixes tolerances
};

Context make_context(const PointSet& ps, const Moments& m) {
    if (ps.n() != 4)
        throw Error("four-point solver requires exactly 4 points, got " +
                    std::to_string(ps.n()));
    if (!ps.full_rank)
        throw SingularT("four-point solver: scatter matrix is singular (coplanar points)");
    Context ctx;
    ctx.ps = &ps;
    ctx.m = &m;
    for (int i = 0; i < 4; ++i) ctx.X.row(i) = ps.points[static_cast<size_t>(i)].transpose();
    Eigen::LDLT<Matrix3d> ldlt(m.T);
    if (ldlt.info() != Eigen::Success)
        throw SingularT("four-point solver: scatter matrix factorization failed");
    ctx.G = ldlt.solve(Matrix34(ctx.X.transpose()));
    ctx.scale_sq = m.V.trace();
    return ctx;
}

struct Value {
    Vector4 b;       // b_i = u'B_i u
    Vector3d gamma;  // T^-1 X' b
    double h = 0.0;  // gamma'u, the orthogonality residual
    double q = 0.0;  // quartic objective
};

Value value_at(const Context& ctx, const Vector3d& u) {
    Value v;
    for (int i = 0; i < 4; ++i)
        v.b(i) = u.dot(ctx.m->B[static_cast<size_t>(i)] * u);
    v.gamma = ctx.G * v.b;
    v.h = v.gamma.dot(u);
    v.q = u.squaredNorm() * u.dot(ctx.m->W * u) + v.gamma.squaredNorm();
    return v;
}

struct Derivs {
    Vector3d g;       // gradient of the quartic
    Matrix3d hess;    // Hessian of the quartic
    Vector3d grad_h;  // gradient of the orthogonality residual
    Matrix3d hess_h;  // Hessian of the orthogonality residual
};

Derivs derivs_at(const Context& ctx, const Vector3d& u, const Value& v) {
    const auto& B = ctx.m->B;
    Matrix43 jb;  // rows d b_i / du = 2 (B_i u)'
    for (int i = 0; i < 4; ++i)
        jb.row(i) = 2.0 * (B[static_cast<size_t>(i)] * u).transpose();
    const Matrix3d jg = ctx.G * jb;  // d gamma / du

    const Vector3d wu = ctx.m->W * u;
    const double uu = u.squaredNorm();
    const double uwu = u.dot(wu);

    const Vector4 gg = ctx.G.transpose() * v.gamma;  // (X T^-1 gamma)_i
    const Vector4 gu = ctx.G.transpose() * u;        // (X T^-1 u)_i
    Matrix3d sum_bg = Matrix3d::Zero();
    Matrix3d sum_bu = Matrix3d::Zero();
    for (int i = 0; i < 4; ++i) {
        sum_bg += gg(i) * B[static_cast<size_t>(i)];
        sum_bu += gu(i) * B[static_cast<size_t>(i)];
    }

    Derivs d;
    d.g = 2.0 * uwu * u + 2.0 * uu * wu + 2.0 * jg.transpose() * v.gamma;
    d.hess = 2.0 * uwu * Matrix3d::Identity() + 4.0 * u * wu.transpose() +
             4.0 * wu * u.transpose() + 2.0 * uu * ctx.m->W +
             2.0 * jg.transpose() * jg + 4.0 * sum_bg;
    d.grad_h = v.gamma + jg.transpose() * u;
    d.hess_h = jg + jg.transpose() + 2.0 * sum_bu;
    return d;
}

// Fit the multipliers (K, L) of the orthogonality and unit-norm constraints
// by minimizing || g - 2K grad_h - 2L u ||.
void fit_multipliers(const Derivs& d, const Vector3d& u, double& k_mul, double& l_mul) {
    const Vector3d a = 2.0 * d.grad_h;
    const Vector3d b = 2.0 * u;
    const double aa = a.squaredNorm();
    const double bb = b.squaredNorm();
    const double ab = a.dot(b);
    const double ag = a.dot(d.g);
    const double bg = b.dot(d.g);
    const double det = aa * bb - ab * ab;
    if (aa > 0.0 && det > 1e-12 * aa * bb) {
        k_mul = (bb * ag - ab * bg) / det;
        l_mul = (aa * bg - ab * ag) / det;
    } else {
        k_mul = 0.0;  // constraint gradient degenerate or parallel to u
        l_mul = bg / std::max(bb, 1e-300);
    }
}

// Minimal correction of the damped Newton step s0 so that the linearized
// orthogonality residual is cancelled (grad_h's = -h) while the predicted
// first-order change is preserved (g_f's = eta).
Vector3d project_step(const Context& ctx, const Vector3d& s0, const Vector3d& grad_h,
                      double h, const Vector3d& g_f, double eta) {
    const double hh = grad_h.squaredNorm();
    if (hh <= 1e-24 * ctx.scale_sq) return s0;  // constraint locally flat
    const double hf = grad_h.dot(g_f);
    const double ff = g_f.squaredNorm();
    const double det = hh * ff - hf * hf;
    const double r1 = -h - grad_h.dot(s0);
    if (det > 1e-12 * hh * ff) {
        const double r2 = eta - g_f.dot(s0);
        const double lam1 = (ff * r1 - hf * r2) / det;
        const double lam2 = (hh * r2 - hf * r1) / det;
        return s0 + lam1 * grad_h + lam2 * g_f;
    }
    return s0 + grad_h * (r1 / hh);
}

struct StepOutcome {
    FourPointStep step;
    Value value_next;  // value at the accepted iterate, reused by callers
};

StepOutcome do_step(const Context& ctx, const Vector3d& u, const Value& v, double step_scale) {
    const Derivs d = derivs_at(ctx, u, v);
    double k_mul = 0.0, l_mul = 0.0;
    fit_multipliers(d, u, k_mul, l_mul);
    const Vector3d g_f = d.g - 2.0 * k_mul * d.grad_h - 2.0 * l_mul * u;
    const Matrix3d h_f = d.hess - 2.0 * k_mul * d.hess_h - 2.0 * l_mul * Matrix3d::Identity();

    Vector3d s_newton;
    const Eigen::FullPivLU<Matrix3d> lu(h_f);
    if (lu.isInvertible()) {
        s_newton = lu.solve(-g_f);
    } else {
        // singular curvature: damped gradient step scaled by the curvature
        // magnitude so the trial step stays O(1)
        const double curv = std::max(h_f.cwiseAbs().maxCoeff(), 1e-300);
        s_newton = -g_f / curv;
    }
    if (s_newton.norm() > 2.0) s_newton *= 2.0 / s_newton.norm();
    const double eta_full = g_f.dot(s_newton);

    StepOutcome out;
    out.step.accepted = false;
    out.step.u_next = u;
    out.step.objective_next = v.q;

    double alpha = step_scale;
    for (int halve = 0; halve < 20; ++halve, alpha *= 0.5) {
        const Vector3d s0 = alpha * s_newton;
        const double eta = alpha * eta_full;
        const Vector3d s = project_step(ctx, s0, d.grad_h, v.h, g_f, eta);
        const Vector3d u_next = (u + s).normalized();
        const Value v_next = value_at(ctx, u_next);
        if (v_next.q <= v.q + 1e-4 * std::min(0.0, eta) + 1e-13 * std::abs(v.q)) {
            out.step.accepted = true;
            out.step.u_next = u_next;
            out.step.objective_next = v_next.q;
            const double gamma_norm = v_next.gamma.norm();
            out.step.cos_orth = gamma_norm <= 1e-12 * std::sqrt(ctx.scale_sq)
                                    ? 0.0
                                    : std::abs(v_next.h) / gamma_norm;
            out.step.rel_change = std::abs(v_next.q - v.q) / std::max(v_next.q + v.q, 1e-300);
            out.value_next = v_next;
            return out;
        }
    }
    return out;
}

// Pull an iterate back onto the orthogonality manifold by Newton steps along
// the residual gradient.  Returns false when the gradient degenerates or the
// residual fails to reach tol_h.
bool restore_feasibility(const Context& ctx, Vector3d& u, double tol_h) {
    for (int i = 0; i < 15; ++i) {
        const Value v = value_at(ctx, u);
        if (std::abs(v.h) <= tol_h) return true;
        const Derivs d = derivs_at(ctx, u, v);
        const double hh = d.grad_h.squaredNorm();
        if (hh <= 1e-24 * ctx.scale_sq) return false;
        u = (u - (v.h / hh) * d.grad_h).normalized();
    }
    return std::abs(value_at(ctx, u).h) <= tol_h;
}

// Classify a validated stationary point.  Where the orthogonality manifold is
// a smooth curve on the sphere, the sign of the constrained curvature t'H t
// (tangent t, Lagrangian Hessian H) decides; at degenerate points (crossing
// branches, vanishing constraint gradient) nearby feasible samples are
// compared directly.
bool classify_local_min(const Context& ctx, const Vector3d& u, const Value& v) {
    const Derivs d = derivs_at(ctx, u, v);
    double k_mul = 0.0, l_mul = 0.0;
    fit_multipliers(d, u, k_mul, l_mul);
    const double scale_len = std::sqrt(ctx.scale_sq);

    const double grad_h_norm = d.grad_h.norm();
    Vector3d t = u.cross(d.grad_h);
    if (grad_h_norm > 1e-7 * scale_len && t.norm() > 1e-7 * grad_h_norm) {
        t.normalize();
        const Matrix3d h_f =
            d.hess - 2.0 * k_mul * d.hess_h - 2.0 * l_mul * Matrix3d::Identity();
        const double curv = t.dot(h_f * t);
        if (std::abs(curv) > 1e-7 * ctx.m->T.trace()) return curv > 0.0;
    }

    const auto [e1, e2] = plane_basis(u);
    const double delta = 1e-4;
    const double slack = 1e-10 * ctx.scale_sq;
    const double tol_h = 1e-12 * scale_len;
    for (int k = 0; k < 8; ++k) {
        const double phi = 0.39996 + 0.25 * std::numbers::pi * k;
        Vector3d up = (u + delta * (std::cos(phi) * e1 + std::sin(phi) * e2)).normalized();
        if (!restore_feasibility(ctx, up, tol_h)) continue;
        if (line_angle(up, u) < 0.3 * delta) continue;  // collapsed back, uninformative
        if (value_at(ctx, up).q < v.q - slack) return false;
    }
    return true;  // no feasible neighbor strictly below: treat as local minimum
}

struct StartOutcome {
    bool converged = false;
    Vector3d u = Vector3d::Zero();
};

// Reduced gradient after removing the fitted constraint directions; its norm
// is the first-order stationarity measure.  By Euler's identity u'g = 4q, so
// |g| itself is the natural scale.
double reduced_gradient_norm(const Vector3d& u, const Derivs& d) {
    double k_mul = 0.0, l_mul = 0.0;
    fit_multipliers(d, u, k_mul, l_mul);
    return (d.g - 2.0 * k_mul * d.grad_h - 2.0 * l_mul * u).norm();
}

bool is_stationary(const Context& ctx, const Vector3d& u, const Value& v, const Derivs& d,
                   const SolverConfig& cfg) {
    const double stat_tol = std::max(cfg.tol_rel, 1e-12);
    const double gnorm = std::max(d.g.norm(), 1e-300);
    if (reduced_gradient_norm(u, d) > stat_tol * gnorm) return false;
    const double gamma_norm = v.gamma.norm();
    const double cos_orth = gamma_norm <= 1e-12 * std::sqrt(ctx.scale_sq)
                                ? 0.0
                                : std::abs(v.h) / gamma_norm;
    return cos_orth <= cfg.tol_orth;
}

// Monotone descent along the orthogonality curve: curvature-aware tangent
// steps, each pulled back onto the curve before the decrease test.  Used as a
// rescue when the Newton iteration stalls away from a stationary point; pure
// descent cannot reach saddles, but it reliably reaches the curve's minima.
bool descend_curve(const Context& ctx, Vector3d& u, double damping, const SolverConfig& cfg) {
    const double scale_len = std::sqrt(ctx.scale_sq);
    const double tol_h = 1e-12 * scale_len;
    if (!restore_feasibility(ctx, u, tol_h)) return false;

    bool moved = false;
    for (int it = 0; it < cfg.max_iter; ++it) {
        const Value v = value_at(ctx, u);
        const Derivs d = derivs_at(ctx, u, v);
        const double gnorm = std::max(d.g.norm(), 1e-300);

        Vector3d t = u.cross(d.grad_h);
        if (d.grad_h.norm() <= 1e-11 * scale_len || t.norm() <= 1e-9 * d.grad_h.norm())
            return moved;  // constraint gradient degenerate: nothing to follow
        t.normalize();
        const double dq = t.dot(d.g);
        if (std::abs(dq) <= 1e-13 * gnorm) return moved;  // stationary along the curve

        double k_mul = 0.0, l_mul = 0.0;
        fit_multipliers(d, u, k_mul, l_mul);
        const Matrix3d h_f =
            d.hess - 2.0 * k_mul * d.hess_h - 2.0 * l_mul * Matrix3d::Identity();
        const double ddq = t.dot(h_f * t);
        double theta = ddq > 1e-12 * gnorm ? -dq / ddq : -std::copysign(0.25, dq);
        if (theta * dq > 0.0) theta = -std::copysign(std::min(std::abs(theta), 0.25), dq);
        theta = std::clamp(theta, -0.5, 0.5) * damping;

        bool accepted = false;
        for (int halve = 0; halve < 25 && !accepted; ++halve, theta *= 0.5) {
            Vector3d ut = std::cos(theta) * u + std::sin(theta) * t;
            if (!restore_feasibility(ctx, ut, tol_h)) continue;
            if (value_at(ctx, ut).q <= v.q + 1e-4 * theta * dq) {
                u = ut;
                accepted = true;
                moved = true;
            }
        }
        if (!accepted) return moved;
    }
    return moved;
}

StartOutcome run_start(const Context& ctx, const Vector3d& u0, double damping,
                       const SolverConfig& cfg) {
    const double tol_h = 1e-12 * std::sqrt(ctx.scale_sq);

    Vector3d u = u0;
    restore_feasibility(ctx, u, tol_h);  // best effort; Newton handles the rest

    // Newton phase: seeks any stationary point (minima and saddles alike).
    Value v = value_at(ctx, u);
    for (int it = 0; it < cfg.max_iter; ++it) {
        if (is_stationary(ctx, u, v, derivs_at(ctx, u, v), cfg)) return {true, u};
        const StepOutcome so = do_step(ctx, u, v, damping);
        if (!so.step.accepted || (so.step.u_next - u).norm() == 0.0) break;
        u = so.step.u_next;
        v = so.value_next;
    }

    // Rescue phase: a stalled or slow start is walked down the curve to a
    // minimum and polished with full Newton steps.
    if (descend_curve(ctx, u, damping, cfg)) {
        v = value_at(ctx, u);
        for (int it = 0; it < 25; ++it) {
            if (is_stationary(ctx, u, v, derivs_at(ctx, u, v), cfg)) return {true, u};
            const StepOutcome so = do_step(ctx, u, v, 1.0);
            if (!so.step.accepted || (so.step.u_next - u).norm() == 0.0) break;
            u = so.step.u_next;
            v = so.value_next;
        }
    }
    if (is_stationary(ctx, u, v, derivs_at(ctx, u, v), cfg)) return {true, u};
    return {};
}

// Deterministic informed seeds: principal axes of the scatter matrix, the six
// pairwise point differences, and the cross products of the three opposite
// difference pairings.  The interesting stationary directions of symmetric
// configurations sit exactly on these.
std::vector<Vector3d> informed_starts(const Context& ctx) {
    std::vector<Vector3d> seeds;
    const Eigen::SelfAdjointEigenSolver<Matrix3d> eig(ctx.m->T);
    for (int k = 0; k < 3; ++k) {
        const Vector3d v = eig.eigenvectors().col(k);
        if (v.norm() > 0.5) seeds.push_back(v.normalized());
    }
    const auto& p = ctx.ps->points;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            const Vector3d d = p[static_cast<size_t>(i)] - p[static_cast<size_t>(j)];
            if (d.norm() > 1e-12 * std::sqrt(ctx.scale_sq)) seeds.push_back(d.normalized());
        }
    const int pairings[3][4] = {{0, 1, 2, 3}, {0, 2, 1, 3}, {0, 3, 1, 2}};
    for (const auto& pr : pairings) {
        const Vector3d c = (p[static_cast<size_t>(pr[0])] - p[static_cast<size_t>(pr[1])])
                               .cross(p[static_cast<size_t>(pr[2])] - p[static_cast<size_t>(pr[3])]);
        if (c.norm() > 1e-12 * ctx.scale_sq) seeds.push_back(c.normalized());
    }
    return seeds;
}

}  // namespace

Vector3d gamma_from_u(const Vector3d& u, const PointSet& ps, const Moments& m) {
    const Context ctx = make_context(ps, m);
    return value_at(ctx, u).gamma;
}

double quartic_objective(const Vector3d& u, const PointSet& ps, const Moments& m) {
    const Context ctx = make_context(ps, m);
    return value_at(ctx, u).q;
}

Vector3d quartic_gradient(const Vector3d& u, const PointSet& ps, const Moments& m) {
    const Context ctx = make_context(ps, m);
    return derivs_at(ctx, u, value_at(ctx, u)).g;
}

Matrix3d quartic_hessian(const Vector3d& u, const PointSet& ps, const Moments& m) {
    const Context ctx = make_context(ps, m);
    return derivs_at(ctx, u, value_at(ctx, u)).hess;
}

FourPointStep newton_restore_step(const Vector3d& u, const PointSet& ps, const Moments& m,
                                  double step_scale) {
    const Context ctx = make_context(ps, m);
    const Vector3d un = u.normalized();
    return do_step(ctx, un, value_at(ctx, un), step_scale).step;
}

LocalMinSet min_circumscribed_4(const PointSet& ps, const SolverConfig& cfg) {
    const Moments m = compute_moments(ps);
    const Context ctx = make_context(ps, m);
    const double scale_len = std::sqrt(ctx.scale_sq);

    LocalMinSet out;
    out.attempts = cfg.n_starts;

    const std::vector<Vector3d> seeds = informed_starts(ctx);
    const double damping0 = std::clamp(cfg.step_damping, 1e-6, 1.0);
    for (double damping = damping0; damping > 0.1 * damping0; damping *= 0.5) {
        out.minima.clear();
        out.converged = 0;

        for (int start = 0; start < cfg.n_starts; ++start) {
            Vector3d u0;
            if (start < static_cast<int>(seeds.size())) {
                u0 = seeds[static_cast<size_t>(start)];
            } else {
                Rng rng = Rng::for_start(cfg.seed, static_cast<std::uint64_t>(start));
                u0 = random_unit_vector(rng);
            }
            const StartOutcome so = run_start(ctx, u0, damping, cfg);
            if (!so.converged) continue;

            const Vector3d u = sign_normalized(so.u);
            const Value v = value_at(ctx, u);
            const Vector3d c = 0.5 * v.gamma;

            // validate circumscription: all four axis distances must agree
            double mean = 0.0;
            Vector4 delta;
            for (int i = 0; i < 4; ++i) {
                delta(i) = axis_sq_distance(ps.points[static_cast<size_t>(i)], u, c);
                mean += delta(i);
            }
            mean *= 0.25;
            const double max_dev = (delta.array() - mean).abs().maxCoeff();
            if (max_dev > 1e-9 * ctx.scale_sq) continue;

            ++out.converged;
            const double rho = std::sqrt(std::max(0.0, mean));

            bool matched = false;
            for (auto& entry : out.minima) {
                if (line_angle(entry.cylinder.u, u) <= 1e-6 &&
                    std::abs(entry.cylinder.rho - rho) <= 1e-8 * scale_len) {
                    ++entry.hits;
                    matched = true;
                    break;
                }
            }
            if (matched) continue;

            StationaryCylinder sc;
            sc.cylinder = make_cylinder(u, c, rho);
            sc.objective = v.q;
            sc.is_local_min = classify_local_min(ctx, u, v);
            sc.hits = 1;
            out.minima.push_back(sc);
        }

        if (out.converged > 0) break;
    }

    if (out.converged == 0)
        throw NoConvergence("no four-point start converged, even with reduced step damping");

    std::sort(out.minima.begin(), out.minima.end(),
              [](const StationaryCylinder& a, const StationaryCylinder& b) {
                  return std::tie(a.objective, a.cylinder.u.x(), a.cylinder.u.y(),
                                  a.cylinder.u.z()) <
                         std::tie(b.objective, b.cylinder.u.x(), b.cylinder.u.y(),
                                  b.cylinder.u.z());
              });

    int n_min = 0;
    for (const auto& entry : out.minima)
        if (entry.is_local_min) ++n_min;
    out.too_many_warning = n_min > 9;
    return out;
}

}  // namespace cylfit
