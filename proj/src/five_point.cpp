#include "cylfit/five_point.hpp"

#include "cylfit/geometry.hpp"
#include "cylfit/numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

namespace cylfit {

namespace {

using Matrix53 = Eigen::Matrix<double, 5, 3>;
using Matrix35 = Eigen::Matrix<double, 3, 5>;
using Matrix54 = Eigen::Matrix<double, 5, 4>;

// Eigenvalues within this fraction of the spectral norm count as zero and
// route the reduction into the rank-deficient quadric branches.
constexpr double kZeroEig = 1e-10;
// M below this fraction of tr(T) counts as the null matrix (duplicate pair).
constexpr double kNullM = 1e-12;
// Boundary residual agreement required of every returned cylinder.
constexpr double kCircumTol = 1e-9;
// System residual agreement (quadric and cubic, dimensionless) required of
// every returned cylinder.
constexpr double kSystemTol = 1e-10;

struct Context {
    const PointSet* ps = nullptr;
    const Moments* m = nullptr;
    Matrix53 X;
    Matrix35 G;                   // T^-1 X'
    std::array<Matrix3d, 5> P;    // P_i = I tr(V_i) - V_i
    Matrix3d M;
    Spectrum3 spectrum;
    double scale_sq = 0.0;        // mean squared point norm
    double scale_len = 0.0;
    double m_norm = 0.0;          // spectral norm of M
};

Matrix35 solve_g(const PointSet& ps, const Moments& m, Matrix53& x_out) {
    for (int i = 0; i < 5; ++i) x_out.row(i) = ps.points[static_cast<size_t>(i)].transpose();
    Eigen::LDLT<Matrix3d> ldlt(m.T);
    if (ldlt.info() != Eigen::Success)
        throw SingularT("five-point solver: scatter matrix factorization failed");
    return ldlt.solve(Matrix35(x_out.transpose()));
}

Vector3d gamma_at(const Context& ctx, const Vector3d& u) {
    Vector5d b;
    for (int i = 0; i < 5; ++i) b(i) = u.dot(ctx.P[static_cast<size_t>(i)] * u);
    return ctx.G * b;
}

// Gradient of the cubic u'gamma(u).
Vector3d cubic_grad(const Context& ctx, const Vector3d& u, const Vector3d& gamma) {
    Matrix53 jb;
    for (int i = 0; i < 5; ++i)
        jb.row(i) = 2.0 * (ctx.P[static_cast<size_t>(i)] * u).transpose();
    const Matrix3d jg = ctx.G * jb;
    return gamma + jg.transpose() * u;
}

// Coefficients of the homogeneous cubic sum_k y_k (y' G_k y) in a working
// basis, indexed by the exponent triple of (y1, y2, y3).
struct CubicCoeffs {
    double c300, c030, c003, c210, c201, c120, c102, c021, c012, c111;
};

CubicCoeffs cubic_coeffs(const std::array<Matrix3d, 3>& g) {
    CubicCoeffs c{};
    c.c300 = g[0](0, 0);
    c.c030 = g[1](1, 1);
    c.c003 = g[2](2, 2);
    c.c210 = 2.0 * g[0](0, 1) + g[1](0, 0);
    c.c201 = 2.0 * g[0](0, 2) + g[2](0, 0);
    c.c120 = g[0](1, 1) + 2.0 * g[1](0, 1);
    c.c102 = g[0](2, 2) + 2.0 * g[2](0, 2);
    c.c021 = 2.0 * g[1](1, 2) + g[2](1, 1);
    c.c012 = g[1](2, 2) + 2.0 * g[2](1, 2);
    c.c111 = 2.0 * (g[0](1, 2) + g[1](0, 2) + g[2](0, 1));
    return c;
}

// The cubic's coefficient matrices in the basis given by the columns of U:
// with y the coordinates in that basis, u'gamma(u) = sum_k y_k (y' G_k y).
std::array<Matrix3d, 3> rotated_gammas(const Context& ctx, const Matrix3d& basis) {
    const Matrix35 gt = basis.transpose() * ctx.G;
    std::array<Matrix3d, 3> g{Matrix3d::Zero(), Matrix3d::Zero(), Matrix3d::Zero()};
    for (int i = 0; i < 5; ++i) {
        const Matrix3d pt = basis.transpose() * ctx.P[static_cast<size_t>(i)] * basis;
        for (int k = 0; k < 3; ++k) g[static_cast<size_t>(k)] += gt(k, i) * pt;
    }
    return g;
}

void append_roots(const std::vector<double>& coeffs_ascending, std::vector<double>& out) {
    try {
        const RealRoots rr = real_roots(coeffs_ascending);
        out.insert(out.end(), rr.roots.begin(), rr.roots.end());
    } catch (const AllCoefficientsZero&) {
        // identically-zero restriction: the isolated-point candidates that
        // accompany every branch still cover the validated solutions
    }
}

// Up to 8 Newton polish steps on {u'Mu = 0, u'gamma(u) = 0} in the tangent
// plane of the sphere, keeping the best (dimensionless) residual seen.
Vector3d polish(const Context& ctx, Vector3d u) {
    const auto residual = [&](const Vector3d& v, double& q, Vector3d& gamma) {
        q = v.dot(ctx.M * v);
        gamma = gamma_at(ctx, v);
        return std::hypot(q / ctx.m_norm, gamma.dot(v) / std::max(ctx.scale_len, 1e-300));
    };

    Vector3d best_u = u;
    double best_r = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= 8; ++it) {
        double q = 0.0;
        Vector3d gamma;
        const double r = residual(u, q, gamma);
        if (r < best_r) {
            best_r = r;
            best_u = u;
        } else if (it >= 3) {
            break;  // stopped improving after the minimum polish
        }
        if (r <= 1e-15 || it == 8) break;

        const Vector3d grad_q = 2.0 * ctx.M * u;
        const Vector3d grad_c = cubic_grad(ctx, u, gamma);
        const auto [e1, e2] = plane_basis(u);
        Eigen::Matrix2d jt;
        jt << grad_q.dot(e1), grad_q.dot(e2), grad_c.dot(e1), grad_c.dot(e2);
        const double det = jt.determinant();
        const double det_scale = jt.row(0).norm() * jt.row(1).norm();
        if (std::abs(det) <= 1e-14 * det_scale || det_scale == 0.0) break;
        const Eigen::Vector2d delta = jt.inverse() * Eigen::Vector2d(-q, -gamma.dot(u));
        u = (u + delta(0) * e1 + delta(1) * e2).normalized();
    }
    return best_u;
}

// Final acceptance: system residuals, boundary residuals, and (when the
// spectrum is separated) the squared-component interval filter.
bool validate(const Context& ctx, const Vector3d& u_in, Cylinder& out) {
    const Vector3d u = sign_normalized(u_in);
    const double q = u.dot(ctx.M * u);
    if (std::abs(q) > kSystemTol * ctx.m_norm) return false;
    const Vector3d gamma = gamma_at(ctx, u);
    if (std::abs(gamma.dot(u)) > kSystemTol * ctx.scale_len) return false;

    const Vector3d c = 0.5 * gamma;
    double mean = 0.0;
    Vector5d delta;
    for (int i = 0; i < 5; ++i) {
        delta(i) = axis_sq_distance(ctx.ps->points[static_cast<size_t>(i)], u, c);
        mean += delta(i);
    }
    mean *= 0.2;
    if ((delta.array() - mean).abs().maxCoeff() > kCircumTol * ctx.scale_sq) return false;

    try {
        const ComponentBounds cb = component_bounds(ctx.spectrum);
        const Vector3d z = ctx.spectrum.eigenvectors.transpose() * u;
        for (int k = 0; k < 3; ++k) {
            const double zk2 = z(k) * z(k);
            const auto [lo, hi] = cb.bounds[static_cast<size_t>(k)];
            if (zk2 < lo - 1e-7 || zk2 > hi + 1e-7) return false;
        }
    } catch (const EigenTies&) {
        // tied spectrum: the interval filter is undefined; skip it
    }

    out = make_cylinder(u, c, std::sqrt(std::max(0.0, mean)));
    return true;
}

}  // namespace

Vector5d compute_t(const PointSet& ps) {
    if (ps.n() != 5)
        throw Error("five-point solver requires exactly 5 points, got " +
                    std::to_string(ps.n()));
    if (!ps.full_rank)
        throw RankDeficient("five-point solver: points do not span 3D");
    Matrix54 xa;
    for (int i = 0; i < 5; ++i) {
        xa.block<1, 3>(i, 0) = ps.points[static_cast<size_t>(i)].transpose();
        xa(i, 3) = 1.0;
    }
    const Eigen::JacobiSVD<Matrix54> svd(xa, Eigen::ComputeFullU);
    if (svd.singularValues()(3) <= 1e-12 * svd.singularValues()(0))
        throw RankDeficient("five-point solver: coordinate matrix nearly rank-deficient");
    // the left null direction of [X | 1]; scaled so t't = n = 5
    Vector5d t = std::sqrt(5.0) * svd.matrixU().col(4);
    int imax = 0;
    for (int i = 1; i < 5; ++i)
        if (std::abs(t(i)) > std::abs(t(imax))) imax = i;
    if (t(imax) < 0.0) t = -t;
    return t;
}

Matrix3d compute_M(const PointSet& ps, const Moments& m, const Vector5d& t) {
    (void)ps;
    Matrix3d out = Matrix3d::Zero();
    for (int i = 0; i < 5; ++i) out += t(i) * m.B[static_cast<size_t>(i)];
    return out;
}

Verdict existence_verdict(const Spectrum3& spectrum, double trace_t) {
    const double m_norm =
        std::max(std::abs(spectrum.eigenvalues(0)), std::abs(spectrum.eigenvalues(2)));
    if (m_norm <= kNullM * std::max(trace_t, 0.0))
        return Verdict::DegenerateDuplicatePoints;
    double mu1 = spectrum.eigenvalues(0);
    double mu3 = spectrum.eigenvalues(2);
    if (std::abs(mu1) <= kZeroEig * m_norm) mu1 = 0.0;
    if (std::abs(mu3) <= kZeroEig * m_norm) mu3 = 0.0;
    return mu1 * mu3 > 0.0 ? Verdict::NoneDefinite : Verdict::Solutions;
}

Vector3d cubic_gamma(const Vector3d& u, const PointSet& ps, const Moments& m) {
    if (ps.n() != 5)
        throw Error("five-point solver requires exactly 5 points, got " +
                    std::to_string(ps.n()));
    if (!ps.full_rank)
        throw SingularT("five-point solver: scatter matrix is singular");
    Matrix53 x;
    const Matrix35 g = solve_g(ps, m, x);
    Vector5d b;
    for (int i = 0; i < 5; ++i) {
        const Vector3d& xi = ps.points[static_cast<size_t>(i)];
        const double along = u.dot(xi);
        b(i) = u.squaredNorm() * xi.squaredNorm() - along * along;
    }
    return g * b;
}

ComponentBounds component_bounds(const Spectrum3& spectrum) {
    const double mu1 = spectrum.eigenvalues(0);
    const double mu2 = spectrum.eigenvalues(1);
    const double mu3 = spectrum.eigenvalues(2);
    const double m_norm = std::max(std::abs(mu1), std::abs(mu3));
    if (mu1 - mu2 <= 1e-10 * m_norm || mu2 - mu3 <= 1e-10 * m_norm)
        throw EigenTies("component bounds need a separated spectrum");
    ComponentBounds cb;
    if (mu2 >= 0.0) {
        cb.bounds[0] = {0.0, -mu3 / (mu1 - mu3)};
        cb.bounds[1] = {0.0, -mu3 / (mu2 - mu3)};
        cb.bounds[2] = {mu2 / (mu2 - mu3), mu1 / (mu1 - mu3)};
    } else {
        cb.bounds[0] = {-mu2 / (mu1 - mu2), -mu3 / (mu1 - mu3)};
        cb.bounds[1] = {0.0, mu1 / (mu1 - mu2)};
        cb.bounds[2] = {0.0, mu1 / (mu1 - mu3)};
    }
    return cb;
}

CircumscribedSet circumscribed_5(const PointSet& ps, const SolverConfig&) {
    if (ps.n() != 5)
        throw Error("five-point solver requires exactly 5 points, got " +
                    std::to_string(ps.n()));

    CircumscribedSet out;

    // duplicate pre-check, before any linear algebra can blow up
    double scale_sq = 0.0;
    for (const auto& x : ps.points) scale_sq += x.squaredNorm();
    scale_sq /= 5.0;
    const double scale_len = std::sqrt(scale_sq);
    for (int i = 0; i < 5; ++i)
        for (int j = i + 1; j < 5; ++j)
            if ((ps.points[static_cast<size_t>(i)] - ps.points[static_cast<size_t>(j)])
                    .norm() <= 1e-9 * scale_len) {
                out.verdict = Verdict::DegenerateDuplicatePoints;
                return out;
            }

    const Moments m = compute_moments(ps);
    const Vector5d t = compute_t(ps);  // throws RankDeficient on flat input

    Context ctx;
    ctx.ps = &ps;
    ctx.m = &m;
    ctx.G = solve_g(ps, m, ctx.X);
    for (int i = 0; i < 5; ++i) {
        const Vector3d& xi = ps.points[static_cast<size_t>(i)];
        ctx.P[static_cast<size_t>(i)] =
            Matrix3d::Identity() * xi.squaredNorm() - xi * xi.transpose();
    }
    ctx.M = compute_M(ps, m, t);
    ctx.spectrum = eig_sym3(ctx.M);
    ctx.scale_sq = scale_sq;
    ctx.scale_len = scale_len;
    ctx.m_norm = std::max(std::abs(ctx.spectrum.eigenvalues(0)),
                          std::abs(ctx.spectrum.eigenvalues(2)));

    out.reduction.t = t;
    out.reduction.M = ctx.M;
    out.reduction.spectrum = ctx.spectrum;

    out.verdict = existence_verdict(ctx.spectrum, m.T.trace());
    if (out.verdict != Verdict::Solutions) return out;

    const double mu1 = ctx.spectrum.eigenvalues(0);
    const double mu2 = ctx.spectrum.eigenvalues(1);
    const double mu3 = ctx.spectrum.eigenvalues(2);
    const Matrix3d& q_basis = ctx.spectrum.eigenvectors;
    const double zero_th = kZeroEig * ctx.m_norm;

    std::vector<Vector3d> candidates;

    if (std::abs(mu1) > zero_th && std::abs(mu3) > zero_th) {
        // generic indefinite spectrum: rotate about the middle eigenvector so
        // the quadric loses its (3,3) entry, then the quadric is solved for
        // the third coordinate as a parabola v = a w^2 + d in the chart
        // y = (1, w, v), turning the cubic into a polynomial of degree <= 6
        const double r = std::sqrt(-mu1 * mu3);
        const double alpha2 = std::atan(std::sqrt(-mu3 / mu1));
        out.reduction.alpha2 = alpha2;
        const double ca = std::cos(alpha2), sa = std::sin(alpha2);
        Matrix3d rot;
        rot << ca, 0.0, sa, 0.0, 1.0, 0.0, -sa, 0.0, ca;
        const Matrix3d u_basis = q_basis * rot;

        const auto g = rotated_gammas(ctx, u_basis);
        const CubicCoeffs cc = cubic_coeffs(g);
        const double a = -mu2 / (2.0 * r);
        const double d = -(mu1 + mu3) / (2.0 * r);

        std::vector<double> p(7);
        p[0] = cc.c300 + cc.c201 * d + cc.c102 * d * d + cc.c003 * d * d * d;
        p[1] = cc.c210 + cc.c111 * d + cc.c012 * d * d;
        p[2] = cc.c120 + cc.c201 * a + cc.c021 * d + 2.0 * cc.c102 * a * d +
               3.0 * cc.c003 * a * d * d;
        p[3] = cc.c030 + cc.c111 * a + 2.0 * cc.c012 * a * d;
        p[4] = cc.c021 * a + cc.c102 * a * a + 3.0 * cc.c003 * a * a * d;
        p[5] = cc.c012 * a * a;
        p[6] = cc.c003 * a * a * a;
        out.reduction.poly = p;

        std::vector<double> roots;
        append_roots(p, roots);
        for (const double w : roots)
            candidates.push_back(u_basis * Vector3d(1.0, w, a * w * w + d).normalized());

        // the chart misses y1 = 0: there the quadric leaves only y = (0,0,1)
        // unless mu2 vanishes, in which case the whole plane y1 = 0 lies on
        // the quadric and the cubic restricts to a binary cubic
        candidates.push_back(u_basis.col(2));
        if (std::abs(mu2) <= zero_th) {
            std::vector<double> line{cc.c030, cc.c021, cc.c012, cc.c003};
            std::vector<double> taus;
            append_roots(line, taus);
            for (const double tau : taus)
                candidates.push_back(u_basis * Vector3d(0.0, 1.0, tau).normalized());
        }
    } else if (std::abs(mu3) <= zero_th) {
        // positive semidefinite: the quadric collapses to the third
        // eigendirection, or to its whole plane when mu2 vanishes too
        out.reduction.alpha2 = 0.0;
        candidates.push_back(q_basis.col(2));
        if (std::abs(mu2) <= zero_th) {
            const auto g = rotated_gammas(ctx, q_basis);
            const CubicCoeffs cc = cubic_coeffs(g);
            std::vector<double> line{cc.c030, cc.c021, cc.c012, cc.c003};
            out.reduction.poly = line;
            std::vector<double> taus;
            append_roots(line, taus);
            for (const double tau : taus)
                candidates.push_back(q_basis * Vector3d(0.0, 1.0, tau).normalized());
        }
    } else {
        // negative semidefinite: mirror case around the first eigendirection
        out.reduction.alpha2 = 0.0;
        candidates.push_back(q_basis.col(0));
        if (std::abs(mu2) <= zero_th) {
            const auto g = rotated_gammas(ctx, q_basis);
            const CubicCoeffs cc = cubic_coeffs(g);
            std::vector<double> line{cc.c300, cc.c210, cc.c120, cc.c030};
            out.reduction.poly = line;
            std::vector<double> taus;
            append_roots(line, taus);
            for (const double tau : taus)
                candidates.push_back(q_basis * Vector3d(1.0, tau, 0.0).normalized());
            candidates.push_back(q_basis.col(1));
        }
    }

    for (const Vector3d& cand : candidates) {
        const Vector3d u = polish(ctx, cand);
        Cylinder cyl;
        if (!validate(ctx, u, cyl)) continue;
        bool matched = false;
        for (const Cylinder& existing : out.cylinders) {
            if (line_angle(existing.u, cyl.u) <= 1e-6 &&
                std::abs(existing.rho - cyl.rho) <= 1e-8 * scale_len) {
                matched = true;
                break;
            }
        }
        if (!matched) out.cylinders.push_back(cyl);
    }

    std::sort(out.cylinders.begin(), out.cylinders.end(),
              [](const Cylinder& a, const Cylinder& b) {
                  return std::tie(a.rho, a.u.x(), a.u.y(), a.u.z()) <
                         std::tie(b.rho, b.u.x(), b.u.y(), b.u.z());
              });
    return out;
}

}  // namespace cylfit
