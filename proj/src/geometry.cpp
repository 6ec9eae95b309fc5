#include "cylfit/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>

namespace cylfit {

namespace {
constexpr double kRankRatio = 1e-10;  // sigma_min/sigma_max above this counts as full rank
}

PointSet center_points(const std::vector<Vector3d>& raw) {
    PointSet ps;
    ps.points.reserve(raw.size());
    Vector3d mean = Vector3d::Zero();
    for (const Vector3d& p : raw) mean += p;
    if (!raw.empty()) mean /= static_cast<double>(raw.size());
    ps.centroid_offset = mean;
    for (const Vector3d& p : raw) ps.points.push_back(p - mean);

    const int n = ps.n();
    if (n == 0) return ps;

    Eigen::MatrixXd x(n, 3);
    for (int i = 0; i < n; ++i) x.row(i) = ps.points[i].transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(x);
    const auto& sv = svd.singularValues();
    ps.sv_max = sv.size() > 0 ? sv(0) : 0.0;
    ps.sv_min = sv.size() >= 3 ? sv(2) : 0.0;
    ps.rank = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > kRankRatio * ps.sv_max && sv(i) > 0.0) ++ps.rank;
    ps.full_rank = (ps.rank == 3);
    return ps;
}

Moments compute_moments(const PointSet& ps) {
    const int n = ps.n();
    Moments m;
    m.T.setZero();
    for (const Vector3d& p : ps.points) m.T += p * p.transpose();
    m.V = m.T / static_cast<double>(n);
    m.W = Matrix3d::Identity() * m.T.trace() - m.T;
    m.B.reserve(n);
    for (const Vector3d& p : ps.points) {
        const Matrix3d dev = p * p.transpose() - m.V;
        m.B.push_back(Matrix3d::Identity() * dev.trace() - dev);
    }
    return m;
}

double axis_sq_distance(const Vector3d& x, const Vector3d& u, const Vector3d& c) {
    // residual-vector form: no cancellation for points near the axis
    const Vector3d d = x - c;
    const Vector3d r = d - d.dot(u) * u;
    return r.squaredNorm();
}

double axis_sq_distance(const Vector3d& x, const Cylinder& cyl) {
    return axis_sq_distance(x, cyl.u, cyl.c);
}

ResidualProfile residual_profile(const std::vector<Vector3d>& pts, const Cylinder& cyl) {
    ResidualProfile rp;
    rp.delta.reserve(pts.size());
    const double rho2 = cyl.rho * cyl.rho;
    double sum = 0.0;
    for (const Vector3d& p : pts) {
        const double d = axis_sq_distance(p, cyl);
        rp.delta.push_back(d);
        sum += d;
        rp.max_dev = std::max(rp.max_dev, std::abs(d - rho2));
    }
    if (!pts.empty()) {
        rp.mean = sum / static_cast<double>(pts.size());
        double var = 0.0;
        for (double d : rp.delta) var += (d - rp.mean) * (d - rp.mean);
        rp.stdev = std::sqrt(var / static_cast<double>(pts.size()));
    }
    return rp;
}

ResidualProfile residual_profile(const PointSet& ps, const Cylinder& cyl) {
    return residual_profile(ps.points, cyl);
}

double bounding_box_diameter(const std::vector<Vector3d>& pts) {
    if (pts.empty()) return 0.0;
    Vector3d lo = pts.front(), hi = pts.front();
    for (const Vector3d& p : pts) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return (hi - lo).norm();
}

double bounding_box_diameter(const PointSet& ps) {
    return bounding_box_diameter(ps.points);
}

Cylinder make_cylinder(const Vector3d& u, const Vector3d& c, double rho) {
    Cylinder cyl;
    cyl.u = u.normalized();
    cyl.c = c - c.dot(cyl.u) * cyl.u;
    cyl.rho = rho;
    return cyl;
}

double line_angle(const Vector3d& a, const Vector3d& b) {
    const double cross = a.cross(b).norm();
    const double dot = std::abs(a.dot(b));
    return std::atan2(cross, dot);
}

std::pair<Vector3d, Vector3d> plane_basis(const Vector3d& u) {
    // seed with the coordinate axis least aligned with u, for stability
    int k = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(u(i)) < std::abs(u(k))) k = i;
    Vector3d e1 = Vector3d::Unit(k) - u(k) * u;
    e1.normalize();
    const Vector3d e2 = u.cross(e1);
    return {e1, e2};
}

Vector3d sign_normalized(const Vector3d& u) {
    int imax = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(u(i)) > std::abs(u(imax))) imax = i;
    return u(imax) < 0.0 ? Vector3d(-u) : u;
}

}  // namespace cylfit
