/**
 * @file enclosing.cpp
 * @brief Smallest enclosing cylinder: hull pruning, subset enumeration,
 *        candidate selection and the direction-sweep oracle.
 */
#include "cylfit/enclosing.hpp"

#include "cylfit/five_point.hpp"
#include "cylfit/four_point.hpp"
#include "cylfit/geometry.hpp"
#include "cylfit/numerics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace cylfit {

namespace {

// ---------------------------------------------------------------------------
// Minimum-norm point in a convex hull (Wolfe's method).  Maintains a corral
// of affinely independent generators with positive convex weights; each
// outer step adds the most opposed generator, each inner step restores the
// minimum-norm point over the corral.  The returned norm is an upper bound
// on the true distance, tight to ~1e-12 of the generator scale.
// ---------------------------------------------------------------------------

Vector3d corral_point(const std::vector<Vector3d>& q, const std::vector<int>& corral,
                      const std::vector<double>& weight) {
    Vector3d z = Vector3d::Zero();
    double total = 0.0;
    for (std::size_t a = 0; a < corral.size(); ++a) {
        const double w = std::max(0.0, weight[a]);
        z += w * q[corral[a]];
        total += w;
    }
    if (total > 0.0) z /= total;
    return z;
}

double min_norm_in_hull(const std::vector<Vector3d>& q) {
    const int m = static_cast<int>(q.size());
    if (m == 0) throw Error("min_norm_in_hull: empty generator set");
    int first = 0;
    double scale_sq = 0.0;
    for (int i = 0; i < m; ++i) {
        scale_sq = std::max(scale_sq, q[i].squaredNorm());
        if (q[i].squaredNorm() < q[first].squaredNorm()) first = i;
    }
    if (scale_sq == 0.0) return 0.0;

    std::vector<int> corral{first};
    std::vector<double> weight{1.0};
    Vector3d z = q[first];
    const double stop_tol = 1e-14 * scale_sq;

    const int max_outer = std::min(200, 16 + 4 * m);
    for (int outer = 0; outer < max_outer; ++outer) {
        int support = 0;
        double dmin = q[0].dot(z);
        for (int j = 1; j < m; ++j) {
            const double d = q[j].dot(z);
            if (d < dmin) {
                dmin = d;
                support = j;
            }
        }
        if (z.squaredNorm() - dmin <= stop_tol) break;  // optimality certificate
        if (std::find(corral.begin(), corral.end(), support) != corral.end()) break;
        corral.push_back(support);
        weight.push_back(0.0);

        for (int inner = 0; inner < 16; ++inner) {
            const int s = static_cast<int>(corral.size());
            // Minimum-norm point of the affine hull of the corral:
            // KKT system [G 1; 1' 0] [lambda; nu] = [0; 1].
            Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(s + 1, s + 1);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(s + 1);
            for (int a = 0; a < s; ++a)
                for (int b = 0; b < s; ++b) kkt(a, b) = q[corral[a]].dot(q[corral[b]]);
            for (int a = 0; a < s; ++a) {
                kkt(a, s) = 1.0;
                kkt(s, a) = 1.0;
            }
            rhs(s) = 1.0;
            const Eigen::VectorXd lam = kkt.completeOrthogonalDecomposition().solve(rhs);

            bool nonneg = true;
            for (int a = 0; a < s; ++a)
                if (lam(a) < -1e-12) nonneg = false;
            if (nonneg) {
                for (int a = 0; a < s; ++a) weight[a] = std::max(0.0, lam(a));
                break;
            }
            // Walk from the current weights toward lam until a weight
            // reaches zero, then drop that generator and resolve.
            double theta = 1.0;
            for (int a = 0; a < s; ++a)
                if (lam(a) < weight[a] && weight[a] > 0.0)
                    theta = std::min(theta, weight[a] / (weight[a] - lam(a)));
            int drop = -1;
            for (int a = 0; a < s; ++a) {
                weight[a] += theta * (lam(a) - weight[a]);
                if (weight[a] <= 1e-13 && (drop < 0 || weight[a] < weight[drop])) drop = a;
            }
            if (drop < 0) break;
            corral.erase(corral.begin() + drop);
            weight.erase(weight.begin() + drop);
        }
        z = corral_point(q, corral, weight);
    }
    return z.norm();
}

// ---------------------------------------------------------------------------
// Triangle slabs: the cylinder whose axis is parallel to side p-q, lying in
// the triangle plane midway between that side and the opposite vertex r.
// All three corners sit at distance h/2 (h = height of r over line p-q).
// ---------------------------------------------------------------------------

std::optional<Cylinder> side_slab(const Vector3d& p, const Vector3d& q, const Vector3d& r) {
    const Vector3d side = q - p;
    const double len = side.norm();
    if (len <= 0.0) return std::nullopt;
    const Vector3d u = sign_normalized(side / len);
    const Vector3d rel = r - p;
    const Vector3d foot = p + rel.dot(u) * u;
    const Vector3d mid = 0.5 * (foot + r);
    const double h = (r - foot).norm();
    return make_cylinder(u, mid, 0.5 * h);
}

double vdc2(std::uint32_t i) {
    double f = 0.0;
    double b = 0.5;
    while (i != 0u) {
        if (i & 1u) f += b;
        b *= 0.5;
        i >>= 1u;
    }
    return f;
}

Eigen::Matrix3d principal_directions(const PointSet& ps) {
    Eigen::MatrixXd a(ps.n(), 3);
    for (int i = 0; i < ps.n(); ++i) a.row(i) = ps.points[i].transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    return svd.matrixV();
}

// Circumcircle of three points, with a diameter-circle fallback when the
// triple is (numerically) collinear.  The radius is taken as the largest
// distance from the center to the three points so coverage always holds.
Circle2 circle_three(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                     const Eigen::Vector2d& c, double scale_sq) {
    const double d = 2.0 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) +
                            c.x() * (a.y() - b.y()));
    Circle2 out;
    if (std::abs(d) > 1e-14 * std::max(scale_sq, 1e-300)) {
        const double asq = a.squaredNorm(), bsq = b.squaredNorm(), csq = c.squaredNorm();
        out.center.x() = (asq * (b.y() - c.y()) + bsq * (c.y() - a.y()) + csq * (a.y() - b.y())) / d;
        out.center.y() = (asq * (c.x() - b.x()) + bsq * (a.x() - c.x()) + csq * (b.x() - a.x())) / d;
    } else {
        const double ab = (a - b).squaredNorm();
        const double ac = (a - c).squaredNorm();
        const double bc = (b - c).squaredNorm();
        if (ab >= ac && ab >= bc)
            out.center = 0.5 * (a + b);
        else if (ac >= bc)
            out.center = 0.5 * (a + c);
        else
            out.center = 0.5 * (b + c);
    }
    out.radius = std::sqrt(std::max({(a - out.center).squaredNorm(),
                                     (b - out.center).squaredNorm(),
                                     (c - out.center).squaredNorm()}));
    return out;
}

struct Candidate {
    Cylinder cyl;
    std::vector<int> support;
    int k = 0;
};

}  // namespace

std::vector<int> hull_vertices(const PointSet& ps) {
    const int n = ps.n();
    if (n == 0) return {};
    if (n == 1) return {0};

    const double diam = bounding_box_diameter(ps);
    const double cluster_tol = 1e-9 * diam;
    const double drop_tol = 1e-10 * diam;

    // Collapse duplicate clusters onto their lowest index.
    std::vector<int> rep_of(n, -1);
    std::vector<int> reps;
    for (int i = 0; i < n; ++i) {
        if (rep_of[i] >= 0) continue;
        rep_of[i] = i;
        reps.push_back(i);
        for (int j = i + 1; j < n; ++j)
            if (rep_of[j] < 0 && (ps.points[j] - ps.points[i]).norm() <= cluster_tol)
                rep_of[j] = i;
    }
    if (reps.size() == 1) return {reps.front()};

    // A representative is a vertex exactly when it lies outside the hull of
    // the other representatives.  Only provably interior points are dropped.
    std::vector<int> out;
    for (const int idx : reps) {
        std::vector<Vector3d> others;
        others.reserve(reps.size() - 1);
        for (const int jdx : reps)
            if (jdx != idx) others.push_back(ps.points[jdx] - ps.points[idx]);
        if (min_norm_in_hull(others) > drop_tol) out.push_back(idx);
    }
    if (out.empty()) out.push_back(reps.front());
    return out;
}

double distance_to_hull(const Vector3d& p, const std::vector<Vector3d>& cloud) {
    if (cloud.empty()) throw Error("distance_to_hull: empty cloud");
    std::vector<Vector3d> q;
    q.reserve(cloud.size());
    for (const auto& v : cloud) q.push_back(v - p);
    return min_norm_in_hull(q);
}

Cylinder triangle_min_cylinder(const Vector3d& a, const Vector3d& b, const Vector3d& c) {
    std::optional<Cylinder> best;
    const std::array<std::array<const Vector3d*, 3>, 3> sides = {{
        {&a, &b, &c},
        {&b, &c, &a},
        {&a, &c, &b},
    }};
    for (const auto& s : sides) {
        const auto cand = side_slab(*s[0], *s[1], *s[2]);
        if (cand && (!best || cand->rho < best->rho)) best = cand;
    }
    if (!best) return make_cylinder(Vector3d::UnitZ(), a, 0.0);  // coincident points
    return *best;
}

std::pair<bool, double> enclosure_check(const Cylinder& cyl, const PointSet& ps) {
    if (ps.n() == 0) return {true, 0.0};
    const double rho_sq = cyl.rho * cyl.rho;
    double worst = -std::numeric_limits<double>::infinity();
    double scale_sq = 0.0;
    for (const auto& p : ps.points) {
        scale_sq = std::max(scale_sq, p.squaredNorm());
        worst = std::max(worst, axis_sq_distance(p, cyl) - rho_sq);
    }
    const bool encloses = worst <= 1e-9 * rho_sq;
    return {encloses, worst / std::max(scale_sq, 1e-300)};
}

EnclosingResult smallest_enclosing_cylinder(const PointSet& ps, const SolverConfig& cfg) {
    const int n = ps.n();
    if (n < 1) throw Error("smallest_enclosing_cylinder: empty point set");

    EnclosingResult res;
    const std::vector<int> hull = hull_vertices(ps);
    res.hull_size = static_cast<int>(hull.size());
    const double diam = bounding_box_diameter(ps);

    // Coincident / collinear fast path: a zero-spread axis along the
    // dominant direction already encloses everything.
    if (ps.rank <= 1) {
        Vector3d u = Vector3d::UnitZ();
        if (ps.rank == 1) u = sign_normalized(principal_directions(ps).col(0));
        double dmax = 0.0;
        for (const auto& p : ps.points)
            dmax = std::max(dmax, axis_sq_distance(p, u, Vector3d::Zero()));
        res.cylinder = make_cylinder(u, Vector3d::Zero(), std::sqrt(dmax));
        if (ps.rank == 0) {
            res.k = 1;
            res.support = {0};
        } else {
            int lo = 0, hi = 0;
            for (int i = 1; i < n; ++i) {
                if (ps.points[i].dot(u) < ps.points[lo].dot(u)) lo = i;
                if (ps.points[i].dot(u) > ps.points[hi].dot(u)) hi = i;
            }
            res.k = 2;
            res.support = {std::min(lo, hi), std::max(lo, hi)};
        }
        res.candidates_examined = 1;
        res.subset_failures = 0;
        return res;
    }

    std::vector<Candidate> enclosing;
    int examined = 0;
    int failures = 0;
    auto consider = [&](const Cylinder& cyl, std::vector<int> support, int k) {
        ++examined;
        if (enclosure_check(cyl, ps).first)
            enclosing.push_back({cyl, std::move(support), k});
    };

    const int h = res.hull_size;

    // k = 3: for every hull triangle, all three side-parallel slabs.  The
    // smallest-height slab is the triangle's own optimum, but a 3-supported
    // enclosing optimum may rest on either of the other two, so all three
    // enter the candidate pool.
    for (int a = 0; a < h; ++a)
        for (int b = a + 1; b < h; ++b)
            for (int c = b + 1; c < h; ++c) {
                const Vector3d& pa = ps.points[hull[a]];
                const Vector3d& pb = ps.points[hull[b]];
                const Vector3d& pc = ps.points[hull[c]];
                const std::array<std::array<const Vector3d*, 3>, 3> sides = {{
                    {&pa, &pb, &pc},
                    {&pb, &pc, &pa},
                    {&pa, &pc, &pb},
                }};
                for (const auto& s : sides) {
                    const auto slab = side_slab(*s[0], *s[1], *s[2]);
                    if (slab) consider(*slab, {hull[a], hull[b], hull[c]}, 3);
                }
            }

    // k = 4 and k = 5 need genuinely 3D subsets; planar inputs are fully
    // covered by the slab candidates above.
    if (ps.rank == 3) {
        for (int a = 0; a < h; ++a)
            for (int b = a + 1; b < h; ++b)
                for (int c = b + 1; c < h; ++c)
                    for (int d = c + 1; d < h; ++d) {
                        const PointSet sub = center_points({ps.points[hull[a]], ps.points[hull[b]],
                                                            ps.points[hull[c]], ps.points[hull[d]]});
                        try {
                            const LocalMinSet lm = min_circumscribed_4(sub, cfg);
                            for (const auto& st : lm.minima)
                                consider(make_cylinder(sign_normalized(st.cylinder.u),
                                                       st.cylinder.c + sub.centroid_offset,
                                                       st.cylinder.rho),
                                         {hull[a], hull[b], hull[c], hull[d]}, 4);
                        } catch (const SingularT&) {
                            ++failures;
                        } catch (const RankDeficient&) {
                            ++failures;
                        } catch (const NoConvergence&) {
                            ++failures;
                        }
                    }

        for (int a = 0; a < h; ++a)
            for (int b = a + 1; b < h; ++b)
                for (int c = b + 1; c < h; ++c)
                    for (int d = c + 1; d < h; ++d)
                        for (int e = d + 1; e < h; ++e) {
                            const PointSet sub = center_points({ps.points[hull[a]], ps.points[hull[b]],
                                                                ps.points[hull[c]], ps.points[hull[d]],
                                                                ps.points[hull[e]]});
                            try {
                                const CircumscribedSet cs = circumscribed_5(sub, cfg);
                                if (cs.verdict != Verdict::Solutions) continue;
                                for (const auto& cyl : cs.cylinders)
                                    consider(make_cylinder(sign_normalized(cyl.u),
                                                           cyl.c + sub.centroid_offset, cyl.rho),
                                             {hull[a], hull[b], hull[c], hull[d], hull[e]}, 5);
                            } catch (const SingularT&) {
                                ++failures;
                            } catch (const RankDeficient&) {
                                ++failures;
                            }
                        }
    }

    res.candidates_examined = examined;
    res.subset_failures = failures;

    if (enclosing.empty())
        throw NoCandidateFound("no enclosing candidate found: " + std::to_string(examined) +
                               " candidates from " + std::to_string(h) +
                               " hull vertices were examined, " + std::to_string(failures) +
                               " subset solves failed");

    // Smallest radius wins; radii within the tie band resolve by smaller
    // support size, then lexicographically smaller support, so the result
    // does not depend on enumeration order.
    double rho_min = std::numeric_limits<double>::infinity();
    for (const auto& cand : enclosing) rho_min = std::min(rho_min, cand.cyl.rho);
    const double tie = 1e-10 * diam;
    const Candidate* best = nullptr;
    for (const auto& cand : enclosing) {
        if (cand.cyl.rho > rho_min + tie) continue;
        if (best == nullptr) {
            best = &cand;
            continue;
        }
        if (cand.k != best->k) {
            if (cand.k < best->k) best = &cand;
            continue;
        }
        if (cand.support < best->support)
            best = &cand;
        else if (cand.support == best->support && cand.cyl.rho < best->cyl.rho)
            best = &cand;
    }

    res.cylinder = best->cyl;
    res.support = best->support;
    res.k = best->k;
    if (!enclosure_check(res.cylinder, ps).first)
        throw Error("smallest_enclosing_cylinder: selected candidate lost enclosure");
    return res;
}

double oracle_enclosing_radius(const PointSet& ps, int grid_resolution) {
    if (grid_resolution < 8) throw Error("oracle_enclosing_radius: grid resolution must be >= 8");
    const int n = ps.n();
    if (n == 0) throw Error("oracle_enclosing_radius: empty point set");

    // Prefix-nested spiral: the direction list for a smaller resolution is a
    // prefix of the list for a larger one, so refinement can only improve
    // the best radius.  Appending the fixed principal directions keeps that
    // property and makes degenerate (collinear/planar) sweeps exact.
    std::vector<Vector3d> dirs;
    dirs.reserve(static_cast<std::size_t>(grid_resolution) + 3);
    constexpr double golden_angle = 2.399963229728653;
    for (int i = 0; i < grid_resolution; ++i) {
        const double z = 1.0 - 2.0 * vdc2(static_cast<std::uint32_t>(i));
        const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * static_cast<double>(i);
        dirs.emplace_back(s * std::cos(phi), s * std::sin(phi), z);
    }
    const Eigen::Matrix3d pd = principal_directions(ps);
    for (int j = 0; j < 3; ++j) dirs.push_back(pd.col(j));

    double best = std::numeric_limits<double>::infinity();
    std::vector<Eigen::Vector2d> proj(n);
    for (const auto& d : dirs) {
        const auto [e1, e2] = plane_basis(d);
        for (int i = 0; i < n; ++i)
            proj[i] = Eigen::Vector2d(e1.dot(ps.points[i]), e2.dot(ps.points[i]));
        best = std::min(best, smallest_enclosing_circle(proj).radius);
    }
    return best;
}

Circle2 smallest_enclosing_circle(const std::vector<Eigen::Vector2d>& pts) {
    Circle2 out;
    if (pts.empty()) return out;

    std::vector<Eigen::Vector2d> p(pts);
    Rng rng(0x9E3779B97F4A7C15ull);
    for (std::size_t i = p.size() - 1; i > 0; --i) {
        auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i + 1));
        std::swap(p[i], p[std::min(j, i)]);
    }

    double scale_sq = 0.0;
    for (const auto& v : p) scale_sq = std::max(scale_sq, v.squaredNorm());
    const double slack = 1e-12 * std::max(scale_sq, 1e-300);
    const auto inside = [&](const Circle2& c, const Eigen::Vector2d& v) {
        return (v - c.center).squaredNorm() <= c.radius * c.radius + slack;
    };
    const auto two = [](const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
        return Circle2{0.5 * (a + b), 0.5 * (a - b).norm()};
    };

    Circle2 c{p[0], 0.0};
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (inside(c, p[i])) continue;
        c = {p[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (inside(c, p[j])) continue;
            c = two(p[i], p[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (inside(c, p[k])) continue;
                c = circle_three(p[i], p[j], p[k], scale_sq);
            }
        }
    }
    return c;
}

}  // namespace cylfit
