#include "cylfit/bestfit.hpp"

#include "cylfit/geometry.hpp"
#include "cylfit/numerics.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace cylfit;

namespace {

// Independent oracle for the optimal axis point: the deviations
// delta_i - mean(delta) are affine in c on the plane c.u = 0, so the variance
// is a convex quadratic in the plane coordinates and one exact Newton step
// (finite differences are exact on quadratics) lands on the minimizer.
Vector3d fd_center_oracle(const Vector3d& u, const PointSet& ps) {
    const auto [e1, e2] = plane_basis(u);
    const auto variance_at = [&](double al, double be) {
        const Vector3d c = al * e1 + be * e2;
        std::vector<double> d;
        d.reserve(ps.points.size());
        double mean = 0.0;
        for (const auto& p : ps.points) {
            d.push_back(axis_sq_distance(p, u, c));
            mean += d.back();
        }
        mean /= static_cast<double>(d.size());
        double var = 0.0;
        for (double v : d) var += (v - mean) * (v - mean);
        return var / static_cast<double>(d.size());
    };
    const double h = 1e-3;
    const double g0 = (variance_at(h, 0) - variance_at(-h, 0)) / (2 * h);
    const double g1 = (variance_at(0, h) - variance_at(0, -h)) / (2 * h);
    const double h00 =
        (variance_at(h, 0) - 2 * variance_at(0, 0) + variance_at(-h, 0)) / (h * h);
    const double h11 =
        (variance_at(0, h) - 2 * variance_at(0, 0) + variance_at(0, -h)) / (h * h);
    const double h01 = (variance_at(h, h) - variance_at(h, -h) - variance_at(-h, h) +
                        variance_at(-h, -h)) /
                       (4 * h * h);
    Eigen::Matrix2d hess;
    hess << h00, h01, h01, h11;
    const Eigen::Vector2d step = hess.ldlt().solve(Eigen::Vector2d(g0, g1));
    return -step(0) * e1 - step(1) * e2;
}

double fd_grad_component(const Vector3d& u, int k, const PointSet& ps, const Moments& m,
                         double h) {
    Vector3d up = u, um = u;
    up(k) += h;
    um(k) -= h;
    return (fit_objective(up, ps, m) - fit_objective(um, ps, m)) / (2 * h);
}

}  // namespace

TEST_SUITE("bestfit") {

TEST_CASE("optimal_center matches an independent in-plane minimizer") {
    Rng rng(31);
    for (int trial = 0; trial < 25; ++trial) {
        const PointSet ps = testutil::random_full_rank(rng, 6 + trial % 7);
        const Moments m = compute_moments(ps);
        const Vector3d u = random_unit_vector(rng);
        const Vector3d c = optimal_center(u, ps, m);
        const Vector3d oracle = fd_center_oracle(u, ps);
        CHECK((c - oracle).norm() <= 1e-7 * (1.0 + oracle.norm()));
        // the constraint is satisfied exactly by construction
        CHECK(std::abs(c.dot(u)) <= 1e-13);
    }
}

TEST_CASE("fit_objective equals the residual variance at the optimal center") {
    Rng rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        const PointSet ps = testutil::random_full_rank(rng, 8);
        const Moments m = compute_moments(ps);
        const Vector3d u = random_unit_vector(rng);
        const Vector3d c = optimal_center(u, ps, m);
        const Cylinder cyl = make_cylinder(u, c, 1.0);
        const ResidualProfile rp = residual_profile(ps, cyl);
        CHECK(fit_objective(u, ps, m) ==
              doctest::Approx(rp.stdev * rp.stdev).epsilon(1e-10));
    }
}

TEST_CASE("fit_objective is homogeneous of degree 4") {
    Rng rng(33);
    const PointSet ps = testutil::random_full_rank(rng, 7);
    const Moments m = compute_moments(ps);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector3d u = random_unit_vector(rng);
        const double s = rng.uniform(0.5, 3.0);
        CHECK(fit_objective(s * u, ps, m) ==
              doctest::Approx(std::pow(s, 4) * fit_objective(u, ps, m)).epsilon(1e-10));
    }
}

TEST_CASE("analytic gradient and Hessian match central differences") {
    Rng rng(34);
    for (int inst = 0; inst < 20; ++inst) {
        const PointSet ps = testutil::random_full_rank(rng, 5 + inst % 6);
        const Moments m = compute_moments(ps);
        const Vector3d u = random_unit_vector(rng);

        const Vector3d g = fit_gradient(u, ps, m);
        Vector3d g_fd;
        for (int k = 0; k < 3; ++k) g_fd(k) = fd_grad_component(u, k, ps, m, 1e-6);
        CHECK((g - g_fd).norm() <= 1e-5 * std::max(g.norm(), 1e-8));

        const Matrix3d hess = fit_hessian(u, ps, m);
        Matrix3d h_fd;
        const double h = 1e-4;
        for (int k = 0; k < 3; ++k) {
            Vector3d up = u, um = u;
            up(k) += h;
            um(k) -= h;
            Vector3d gp, gm;
            for (int l = 0; l < 3; ++l) {
                gp(l) = fd_grad_component(up, l, ps, m, h);
                gm(l) = fd_grad_component(um, l, ps, m, h);
            }
            h_fd.col(k) = (gp - gm) / (2 * h);
        }
        CHECK((hess - h_fd).norm() <= 1e-5 * std::max(hess.norm(), 1e-8));
        CHECK((hess - hess.transpose()).norm() <= 1e-10 * std::max(hess.norm(), 1e-8));
    }
}

TEST_CASE("fit_cylinder recovers a planted cylinder from exact surface points") {
    Rng rng(35);
    SolverConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        const Cylinder planted = testutil::random_cylinder(rng);
        const auto raw = testutil::sample_cylinder_surface(rng, planted, 30, 1.5);
        const PointSet ps = center_points(raw);
        const FitResult fr = fit_cylinder(ps, cfg);

        CHECK(fr.variance <= 1e-18);
        CHECK(fr.is_circumscribed);
        CHECK(fr.n_starts_converged >= 1);
        CHECK(line_angle(fr.cylinder.u, planted.u) <= 1e-6);
        CHECK(fr.cylinder.rho == doctest::Approx(planted.rho).epsilon(1e-7));

        // in the original frame every sample sits on the fitted surface
        const Cylinder orig =
            make_cylinder(fr.cylinder.u, fr.cylinder.c + ps.centroid_offset, fr.cylinder.rho);
        CHECK(residual_profile(raw, orig).max_dev <= 1e-9);
    }
}

TEST_CASE("fit_cylinder on the regular tetrahedron finds a circumscribing cylinder") {
    // Four points admit a whole curve of directions with an exact
    // circumscribing cylinder, so the variance minimum is zero along the
    // entire curve and the solver may land anywhere on it.  The radius range
    // over that curve is [sqrt(2), 3/2].
    const PointSet ps = center_points(testutil::regular_tetrahedron());
    SolverConfig cfg;
    const FitResult fr = fit_cylinder(ps, cfg);
    CHECK(fr.variance <= 1e-16);
    CHECK(fr.is_circumscribed);
    CHECK(fr.cylinder.rho >= std::sqrt(2.0) - 1e-6);
    CHECK(fr.cylinder.rho <= 1.5 + 1e-6);
    CHECK(residual_profile(ps, fr.cylinder).max_dev <= 1e-8);
}

TEST_CASE("fit_cylinder is equivariant under rigid motions") {
    Rng rng(36);
    const PointSet ps = testutil::random_full_rank(rng, 9);
    const Moments m = compute_moments(ps);
    const Matrix3d rot = testutil::random_rotation(rng);
    const Vector3d shift(0.7, -1.3, 2.1);

    std::vector<Vector3d> moved;
    for (const auto& p : ps.points) moved.push_back(rot * p + shift);
    const PointSet ps2 = center_points(moved);
    const Moments m2 = compute_moments(ps2);

    for (int trial = 0; trial < 10; ++trial) {
        const Vector3d u = random_unit_vector(rng);
        CHECK(fit_objective(rot * u, ps2, m2) ==
              doctest::Approx(fit_objective(u, ps, m)).epsilon(1e-9));
        const Vector3d c1 = optimal_center(u, ps, m);
        const Vector3d c2 = optimal_center(rot * u, ps2, m2);
        CHECK((c2 - rot * c1).norm() <= 1e-9 * (1.0 + c1.norm()));
    }
}

TEST_CASE("fit_cylinder is deterministic for a fixed config") {
    Rng rng(37);
    const PointSet ps = testutil::random_full_rank(rng, 12);
    SolverConfig cfg;
    const FitResult a = fit_cylinder(ps, cfg);
    const FitResult b = fit_cylinder(ps, cfg);
    CHECK(a.cylinder.rho == b.cylinder.rho);
    CHECK((a.cylinder.u - b.cylinder.u).norm() == 0.0);
    CHECK((a.cylinder.c - b.cylinder.c).norm() == 0.0);
    CHECK(a.variance == b.variance);
    CHECK(a.n_starts_converged == b.n_starts_converged);
}

TEST_CASE("rank-deficient input raises SingularCovariance") {
    Rng rng(38);
    std::vector<Vector3d> flat;
    for (int i = 0; i < 8; ++i)
        flat.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0);
    const PointSet ps = center_points(flat);
    const Moments m = compute_moments(ps);
    SolverConfig cfg;
    CHECK_THROWS_AS((void)optimal_center(Vector3d::UnitX(), ps, m), SingularCovariance);
    CHECK_THROWS_AS((void)fit_cylinder(ps, cfg), SingularCovariance);
}

}  // TEST_SUITE
