/**
 * @file main.cpp
 * @brief cylfit command line: fit | circ4 | circ5 | enclose | verify.
 *
 * Exit codes: 0 ok, 1 input error, 2 no convergence / no candidate,
 * 3 rank-deficient input, 4 degenerate duplicate points.
 */
#include "cylfit/bestfit.hpp"
#include "cylfit/enclosing.hpp"
#include "cylfit/five_point.hpp"
#include "cylfit/four_point.hpp"
#include "cylfit/geometry.hpp"
#include "cylfit/io.hpp"
#include "cylfit/numerics.hpp"
#include "cylfit/types.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace cylfit;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNoConvergence = 2;
constexpr int kExitRankDeficient = 3;
constexpr int kExitDegenerate = 4;

struct Options {
    std::string file;
    std::string format = "json";
    SolverConfig cfg;
    int oracle_res = 0;  // 0 = no oracle cross-check
    std::string h_grid = "0.5:3.0:0.1";
    int sweep = 100;
};

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string verdict_name(Verdict v) {
    switch (v) {
        case Verdict::Solutions: return "Solutions";
        case Verdict::NoneDefinite: return "NoneDefinite";
        case Verdict::DegenerateDuplicatePoints: return "DegenerateDuplicatePoints";
    }
    return "Unknown";
}

PointFile load_points(const std::string& path) {
    PointFile pf = read_point_file(path);
    if (pf.points.empty()) throw Error("input file contains no points: " + path);
    return pf;
}

nlohmann::ordered_json json_vector(const std::vector<double>& v) {
    return nlohmann::ordered_json(v);
}

// ---------------------------------------------------------------------------
// fit: best-fitting cylinder (minimal variance of squared axis distances)
// ---------------------------------------------------------------------------

int run_fit(const Options& opt) {
    const PointFile pf = load_points(opt.file);
    const PointSet ps = center_points(pf.points);

    ResultDocument doc;
    doc.command = "fit";
    doc.n = ps.n();
    doc.centroid = ps.centroid_offset;
    doc.config = opt.cfg;
    if (ps.n() < 5) {
        std::cerr << "warning: best fit over " << ps.n()
                  << " points is weakly determined (5 or more recommended)\n";
        doc.diagnostics["warnings"] = nlohmann::ordered_json::array(
            {"fewer than 5 points: the best-fit problem is weakly determined"});
    }

    Timer tm;
    const FitResult fr = fit_cylinder(ps, opt.cfg);
    doc.elapsed_seconds = tm.seconds();

    CylinderRecord rec = make_record(fr.cylinder, ps.centroid_offset, pf.points);
    rec.has_objective = true;
    rec.objective = fr.variance;
    doc.cylinders.push_back(rec);

    doc.diagnostics["variance"] = fr.variance;
    doc.diagnostics["is_circumscribed"] = fr.is_circumscribed;
    doc.diagnostics["n_starts_converged"] = fr.n_starts_converged;

    std::cout << render(doc, opt.format);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// circ4: all stationary cylinders through exactly four points
// ---------------------------------------------------------------------------

int run_circ4(const Options& opt) {
    const PointFile pf = load_points(opt.file);
    if (static_cast<int>(pf.points.size()) != 4)
        throw Error("circ4 needs exactly 4 points, got " + std::to_string(pf.points.size()));
    const PointSet ps = center_points(pf.points);

    ResultDocument doc;
    doc.command = "circ4";
    doc.n = ps.n();
    doc.hull_size = static_cast<int>(hull_vertices(ps).size());
    doc.centroid = ps.centroid_offset;
    doc.config = opt.cfg;

    Timer tm;
    const LocalMinSet lm = min_circumscribed_4(ps, opt.cfg);
    doc.elapsed_seconds = tm.seconds();

    int global_min_index = -1;
    for (std::size_t i = 0; i < lm.minima.size(); ++i) {
        const auto& st = lm.minima[i];
        CylinderRecord rec = make_record(st.cylinder, ps.centroid_offset, pf.points);
        rec.has_local_min_flag = true;
        rec.is_local_min = st.is_local_min;
        rec.has_objective = true;
        rec.objective = st.objective;
        doc.cylinders.push_back(rec);
        if (st.is_local_min && global_min_index < 0) global_min_index = static_cast<int>(i);
    }

    doc.diagnostics["global_min_index"] = global_min_index;
    doc.diagnostics["attempts"] = lm.attempts;
    doc.diagnostics["converged"] = lm.converged;
    if (lm.too_many_warning)
        doc.diagnostics["warnings"] = nlohmann::ordered_json::array(
            {"more distinct stationary cylinders than the theoretical bound"});

    std::cout << render(doc, opt.format);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// circ5: the 0..6 cylinders through exactly five points
// ---------------------------------------------------------------------------

int run_circ5(const Options& opt) {
    const PointFile pf = load_points(opt.file);
    if (static_cast<int>(pf.points.size()) != 5)
        throw Error("circ5 needs exactly 5 points, got " + std::to_string(pf.points.size()));
    const PointSet ps = center_points(pf.points);

    ResultDocument doc;
    doc.command = "circ5";
    doc.n = ps.n();
    doc.hull_size = static_cast<int>(hull_vertices(ps).size());
    doc.centroid = ps.centroid_offset;
    doc.config = opt.cfg;

    Timer tm;
    const CircumscribedSet cs = circumscribed_5(ps, opt.cfg);
    doc.elapsed_seconds = tm.seconds();

    doc.verdict = verdict_name(cs.verdict);
    for (const auto& cyl : cs.cylinders)
        doc.cylinders.push_back(make_record(cyl, ps.centroid_offset, pf.points));

    const auto& mu = cs.reduction.spectrum.eigenvalues;
    doc.diagnostics["m_eigenvalues"] = nlohmann::ordered_json::array({mu(0), mu(1), mu(2)});
    doc.diagnostics["alpha2"] = cs.reduction.alpha2;
    std::vector<double> tvec(cs.reduction.t.data(), cs.reduction.t.data() + 5);
    doc.diagnostics["t"] = json_vector(tvec);
    doc.diagnostics["poly"] = json_vector(cs.reduction.poly);

    int rc = kExitOk;
    if (cs.verdict == Verdict::DegenerateDuplicatePoints) {
        doc.diagnostics["hint"] =
            "two input points coincide; drop one of them and use circ4 on the 4 distinct points";
        std::cerr << "error: two input points coincide; drop one of them and run circ4\n";
        rc = kExitDegenerate;
    }

    std::cout << render(doc, opt.format);
    return rc;
}

// ---------------------------------------------------------------------------
// enclose: smallest enclosing cylinder
// ---------------------------------------------------------------------------

int run_enclose(const Options& opt) {
    const PointFile pf = load_points(opt.file);
    const PointSet ps = center_points(pf.points);

    ResultDocument doc;
    doc.command = "enclose";
    doc.n = ps.n();
    doc.centroid = ps.centroid_offset;
    doc.config = opt.cfg;

    Timer tm;
    const EnclosingResult er = smallest_enclosing_cylinder(ps, opt.cfg);
    doc.elapsed_seconds = tm.seconds();

    doc.hull_size = er.hull_size;
    CylinderRecord rec = make_record(er.cylinder, ps.centroid_offset, pf.points);
    rec.support = er.support;
    doc.cylinders.push_back(rec);

    doc.diagnostics["k"] = er.k;
    doc.diagnostics["candidates_examined"] = er.candidates_examined;
    doc.diagnostics["subset_failures"] = er.subset_failures;
    if (opt.oracle_res > 0) {
        const double oracle = oracle_enclosing_radius(ps, opt.oracle_res);
        doc.diagnostics["oracle_resolution"] = opt.oracle_res;
        doc.diagnostics["oracle_radius"] = oracle;
        doc.diagnostics["oracle_gap"] = er.cylinder.rho - oracle;
    }

    std::cout << render(doc, opt.format);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// verify: built-in fixtures
// ---------------------------------------------------------------------------

std::vector<double> parse_grid(const std::string& s) {
    double a = 0.0, b = 0.0, step = 0.0;
    char c1 = 0, c2 = 0;
    std::istringstream in(s);
    if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':')
        throw Error("cannot parse grid '" + s + "'; expected a:b:step");
    if (step <= 0.0 || b < a) throw Error("grid '" + s + "' must have a <= b and step > 0");
    std::vector<double> grid;
    for (int i = 0;; ++i) {
        const double v = a + static_cast<double>(i) * step;
        if (v > b + 1e-12) break;
        grid.push_back(v);
    }
    return grid;
}

std::vector<Vector3d> bipyramid_points(double h) {
    return {{0.0, 0.0, h},
            {0.0, 0.0, -h},
            {1.0, 0.0, 0.0},
            {-0.5, std::sqrt(3.0) / 2.0, 0.0},
            {-0.5, -std::sqrt(3.0) / 2.0, 0.0}};
}

struct FixtureRow {
    std::string name;
    bool pass = false;
    std::string detail;
};

FixtureRow check_tetrahedron_radii(const SolverConfig& cfg) {
    FixtureRow row{"tetrahedron-radii", false, ""};
    const PointSet ps = center_points({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}});
    const LocalMinSet lm = min_circumscribed_4(ps, cfg);
    const double sqrt2 = std::numbers::sqrt2;

    std::vector<double> distinct;
    for (const auto& st : lm.minima) {
        bool found = false;
        for (const double r : distinct)
            if (std::abs(r - st.cylinder.rho) < 1e-6) found = true;
        if (!found) distinct.push_back(st.cylinder.rho);
    }
    std::sort(distinct.begin(), distinct.end());

    if (distinct.size() != 2) {
        row.detail = "expected 2 distinct radii, got " + std::to_string(distinct.size());
        return row;
    }
    if (std::abs(distinct[0] - sqrt2) > 1e-8 || std::abs(distinct[1] - 1.5) > 1e-8) {
        row.detail = "radii " + format_double(distinct[0]) + ", " + format_double(distinct[1]);
        return row;
    }
    // the larger radius must match 3/2 even more tightly
    for (const auto& st : lm.minima)
        if (std::abs(st.cylinder.rho - 1.5) < 1e-6 && std::abs(st.cylinder.rho - 1.5) > 1e-10) {
            row.detail = "edge-family radius off by " + format_double(st.cylinder.rho - 1.5);
            return row;
        }
    row.pass = true;
    row.detail = format_double(distinct[0]) + " and " + format_double(distinct[1]);
    return row;
}

FixtureRow check_tetrahedron_axes(const SolverConfig& cfg) {
    FixtureRow row{"tetrahedron-axes", false, ""};
    const PointSet ps = center_points({{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}});
    const LocalMinSet lm = min_circumscribed_4(ps, cfg);
    const double sqrt2 = std::numbers::sqrt2;
    const std::vector<Vector3d> canon = {Vector3d::UnitX(), Vector3d::UnitY(), Vector3d::UnitZ()};

    std::vector<bool> seen(3, false);
    for (const auto& st : lm.minima) {
        if (std::abs(st.cylinder.rho - sqrt2) > 1e-6) continue;
        if (!st.is_local_min) {
            row.detail = "a global-minimum cylinder is not flagged as a local minimum";
            return row;
        }
        for (int k = 0; k < 3; ++k)
            if (line_angle(st.cylinder.u, canon[k]) <= 1e-8) seen[k] = true;
    }
    if (!(seen[0] && seen[1] && seen[2])) {
        row.detail = "missing canonical axis among the smallest-radius cylinders";
        return row;
    }
    row.pass = true;
    row.detail = "all three coordinate axes found";
    return row;
}

FixtureRow check_bipyramid_grid(const SolverConfig& cfg, const std::string& grid_spec) {
    FixtureRow row{"bipyramid-grid", false, ""};
    const std::vector<double> grid = parse_grid(grid_spec);
    const double threshold = std::numbers::sqrt2 / 2.0;
    int tested = 0;

    for (const double h : grid) {
        if (std::abs(h - threshold) < 1e-4) continue;  // too close to the existence boundary
        ++tested;
        const PointSet ps = center_points(bipyramid_points(h));
        const CircumscribedSet cs = circumscribed_5(ps, cfg);
        const std::string at = " at h=" + format_double(h);

        if (h < threshold) {
            if (cs.verdict != Verdict::NoneDefinite || !cs.cylinders.empty()) {
                row.detail = "expected NoneDefinite with 0 cylinders" + at;
                return row;
            }
            continue;
        }

        if (cs.verdict != Verdict::Solutions || cs.cylinders.size() != 6) {
            row.detail = "expected 6 cylinders, got " + std::to_string(cs.cylinders.size()) + at;
            return row;
        }
        const double rho_true = (4.0 * h * h + 1.0) / (4.0 * h * h + 2.0);
        const double c_norm = 1.0 / (4.0 * h * h + 2.0);
        const double uy = std::sqrt(2.0 / (2.0 * h * h + 1.0));
        const double uz = std::sqrt((2.0 * h * h - 1.0) / (2.0 * h * h + 1.0));

        for (const auto& cyl : cs.cylinders) {
            if (std::abs(cyl.rho - rho_true) > 1e-9) {
                row.detail = "radius off by " + format_double(cyl.rho - rho_true) + at;
                return row;
            }
            if (std::abs(cyl.c.norm() - c_norm) > 1e-9) {
                row.detail = "axis-point norm off by " + format_double(cyl.c.norm() - c_norm) + at;
                return row;
            }
            bool matched = false;
            for (int k = 0; k < 3 && !matched; ++k) {
                const double ang = 2.0 * std::numbers::pi * k / 3.0;
                Matrix3d rot;
                rot << std::cos(ang), -std::sin(ang), 0.0, std::sin(ang), std::cos(ang), 0.0, 0.0,
                    0.0, 1.0;
                for (const double sz : {1.0, -1.0}) {
                    const Vector3d expected_u = rot * Vector3d(0.0, uy, sz * uz);
                    const Vector3d expected_c = rot * Vector3d(c_norm, 0.0, 0.0);
                    if (line_angle(cyl.u, expected_u) <= 1e-9 &&
                        (cyl.c - expected_c).norm() <= 1e-9)
                        matched = true;
                }
            }
            if (!matched) {
                row.detail = "direction/axis point matches no closed-form cylinder" + at;
                return row;
            }
        }
    }
    row.pass = true;
    row.detail = std::to_string(tested) + " h values verified";
    return row;
}

FixtureRow check_five_point_sweep(const SolverConfig& cfg, int sweep) {
    FixtureRow row{"five-point-sweep", false, ""};
    Rng rng(cfg.seed);
    int with_solutions = 0;
    for (int trial = 0; trial < sweep; ++trial) {
        PointSet ps;
        for (int attempt = 0;; ++attempt) {
            std::vector<Vector3d> pts;
            for (int i = 0; i < 5; ++i)
                pts.emplace_back(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0),
                                 rng.uniform(-1.0, 1.0));
            ps = center_points(pts);
            if (ps.full_rank) break;
            if (attempt > 100) {
                row.detail = "could not draw a full-rank 5-point set";
                return row;
            }
        }
        const CircumscribedSet cs = circumscribed_5(ps, cfg);
        if (cs.cylinders.size() > 6) {
            row.detail = "trial " + std::to_string(trial) + ": " +
                         std::to_string(cs.cylinders.size()) + " cylinders exceed the bound of 6";
            return row;
        }
        const double diam = bounding_box_diameter(ps);
        for (const auto& cyl : cs.cylinders) {
            const ResidualProfile rp = residual_profile(ps, cyl);
            if (rp.max_dev > 1e-9 * diam * diam) {
                row.detail = "trial " + std::to_string(trial) +
                             ": residual spread " + format_double(rp.max_dev);
                return row;
            }
        }
        if (!cs.cylinders.empty()) ++with_solutions;
    }
    row.pass = true;
    row.detail = std::to_string(sweep) + " sets, " + std::to_string(with_solutions) +
                 " with at least one cylinder";
    return row;
}

int run_verify(const Options& opt) {
    std::vector<FixtureRow> rows;
    rows.push_back(check_tetrahedron_radii(opt.cfg));
    rows.push_back(check_tetrahedron_axes(opt.cfg));
    rows.push_back(check_bipyramid_grid(opt.cfg, opt.h_grid));
    rows.push_back(check_five_point_sweep(opt.cfg, opt.sweep));

    bool all = true;
    std::cout << "fixture              result  detail\n";
    for (const auto& row : rows) {
        all = all && row.pass;
        std::cout << row.name;
        for (std::size_t i = row.name.size(); i < 21; ++i) std::cout << ' ';
        std::cout << (row.pass ? "PASS    " : "FAIL    ") << row.detail << '\n';
    }
    return all ? kExitOk : kExitNoConvergence;
}

void add_common_flags(CLI::App* sub, Options& opt, bool with_format = true) {
    sub->add_option_function<double>(
           "--tol",
           [&opt](double v) {
               opt.cfg.tol_rel = v;
               opt.cfg.tol_orth = v;
           },
           "convergence tolerance (sets both the relative-change and feasibility thresholds)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--starts", opt.cfg.n_starts, "number of random starts")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", opt.cfg.seed, "random seed");
    sub->add_option("--max-iter", opt.cfg.max_iter, "iteration cap per start")
        ->check(CLI::PositiveNumber);
    if (with_format)
        sub->add_option("--format", opt.format, "output format: json or text")
            ->check(CLI::IsMember({"json", "text"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"best-fit, circumscribed and smallest enclosing cylinders for 3D point sets"};
    app.require_subcommand(1);

    Options opt;
    int rc = kExitOk;

    auto* fit = app.add_subcommand("fit", "best-fitting cylinder of a point cloud");
    fit->add_option("file", opt.file, "point file (CSV x,y,z[,label] or JSON [[x,y,z],...])")
        ->required();
    add_common_flags(fit, opt);
    fit->callback([&] { rc = run_fit(opt); });

    auto* circ4 = app.add_subcommand("circ4", "all stationary cylinders through 4 points");
    circ4->add_option("file", opt.file, "point file with exactly 4 points")->required();
    add_common_flags(circ4, opt);
    circ4->callback([&] { rc = run_circ4(opt); });

    auto* circ5 = app.add_subcommand("circ5", "the up-to-6 cylinders through 5 points");
    circ5->add_option("file", opt.file, "point file with exactly 5 points")->required();
    add_common_flags(circ5, opt);
    circ5->callback([&] { rc = run_circ5(opt); });

    auto* enclose = app.add_subcommand("enclose", "smallest enclosing cylinder");
    enclose->add_option("file", opt.file, "point file (1 or more points)")->required();
    add_common_flags(enclose, opt);
    enclose->add_option("--oracle", opt.oracle_res,
                        "cross-check against the direction-grid oracle at this resolution")
        ->check(CLI::Range(8, 10000000));
    enclose->callback([&] { rc = run_enclose(opt); });

    auto* verify = app.add_subcommand("verify", "run the built-in verification fixtures");
    add_common_flags(verify, opt, /*with_format=*/false);
    verify->add_option("--h-grid", opt.h_grid, "bipyramid height grid as a:b:step");
    verify->add_option("--sweep", opt.sweep, "number of random five-point sets")
        ->check(CLI::PositiveNumber);
    verify->callback([&] { rc = run_verify(opt); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    } catch (const DegenerateDuplicatePoints& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitDegenerate;
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNoConvergence;
    } catch (const NoCandidateFound& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNoConvergence;
    } catch (const RankDeficient& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRankDeficient;
    } catch (const SingularT& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRankDeficient;
    } catch (const SingularCovariance& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRankDeficient;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return rc;
}
