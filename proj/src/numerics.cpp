#include "cylfit/numerics.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>

namespace cylfit {

// ===== symmetric 3x3 eigendecomposition ====================================

Spectrum3 eig_sym3(const Matrix3d& a) {
    Eigen::SelfAdjointEigenSolver<Matrix3d> es(a);
    Spectrum3 s;
    // Eigen returns ascending order; flip to descending.
    for (int i = 0; i < 3; ++i) {
        s.eigenvalues(i) = es.eigenvalues()(2 - i);
        s.eigenvectors.col(i) = es.eigenvectors().col(2 - i);
    }
    if (s.eigenvectors.determinant() < 0.0) s.eigenvectors.col(2) = -s.eigenvectors.col(2);
    return s;
}

// ===== real roots of a low-degree polynomial ===============================

namespace {

// p and dp/dx at x, ascending coefficients, Horner.
std::pair<double, double> poly_eval(const std::vector<double>& c, double x) {
    double p = 0.0, dp = 0.0;
    for (int k = static_cast<int>(c.size()) - 1; k >= 0; --k) {
        dp = dp * x + p;
        p = p * x + c[static_cast<size_t>(k)];
    }
    return {p, dp};
}

}  // namespace

RealRoots real_roots(const std::vector<double>& coeffs) {
    double max_abs = 0.0;
    for (double c : coeffs) max_abs = std::max(max_abs, std::abs(c));
    if (max_abs == 0.0) throw AllCoefficientsZero("all polynomial coefficients are zero");

    // trim leading terms that are zero relative to the largest coefficient
    std::vector<double> c = coeffs;
    while (c.size() > 1 && std::abs(c.back()) <= 1e-14 * max_abs) c.pop_back();
    if (c.size() == 1) {
        if (std::abs(c[0]) <= 1e-14 * max_abs)
            throw AllCoefficientsZero("polynomial vanishes identically after trimming");
        return {{}, 0};  // nonzero constant: no roots
    }

    RealRoots out;
    const int deg = static_cast<int>(c.size()) - 1;
    out.degree = deg;

    std::vector<double> candidates;
    if (deg == 1) {
        candidates.push_back(-c[0] / c[1]);
    } else {
        // companion-matrix eigenvalues of the monic polynomial
        Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(deg, deg);
        for (int i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
        for (int i = 0; i < deg; ++i) comp(i, deg - 1) = -c[static_cast<size_t>(i)] / c.back();
        Eigen::EigenSolver<Eigen::MatrixXd> es(comp);
        for (int i = 0; i < deg; ++i) {
            const std::complex<double> z = es.eigenvalues()(i);
            // keep near-real eigenvalues as candidates; Newton + the residual
            // acceptance below decide (multiple roots leak imaginary parts)
            if (std::abs(z.imag()) <= 1e-3 * (1.0 + std::abs(z.real())))
                candidates.push_back(z.real());
        }
    }

    // Newton polish; accept only candidates where the residual is small at the
    // scale of the polynomial (filters complex pairs leaking a real part).
    std::vector<double> roots;
    for (double x : candidates) {
        for (int it = 0; it < 20; ++it) {
            auto [p, dp] = poly_eval(c, x);
            if (p == 0.0) break;
            if (dp == 0.0) break;
            const double step = p / dp;
            x -= step;
            if (std::abs(step) <= 1e-16 * (1.0 + std::abs(x))) break;
        }
        const double residual_scale =
            max_abs * std::pow(std::max(1.0, std::abs(x)), static_cast<double>(deg));
        if (std::abs(poly_eval(c, x).first) <= 1e-8 * residual_scale) roots.push_back(x);
    }

    std::sort(roots.begin(), roots.end());
    for (double r : roots) {
        if (out.roots.empty() ||
            std::abs(r - out.roots.back()) > 1e-9 * std::max(1.0, std::abs(r)))
            out.roots.push_back(r);
    }
    return out;
}

// ===== reproducible random directions ======================================

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace

Rng::Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    gen_.seed(splitmix64(s));
}

Rng Rng::for_start(std::uint64_t seed, std::uint64_t start_index) {
    // decorrelate streams by hashing (seed, index) before seeding
    std::uint64_t s = seed ^ (0xA24BAED4963EE407ull * (start_index + 1));
    Rng r(splitmix64(s));
    return r;
}

double Rng::uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

Vector3d random_unit_vector(Rng& rng) {
    for (;;) {
        const Vector3d v(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        const double n2 = v.squaredNorm();
        if (n2 > 1e-8 && n2 <= 1.0) return v / std::sqrt(n2);
    }
}

}  // namespace cylfit
