/**
 * @file numerics.hpp
 * @brief Small numeric kernels: symmetric 3x3 eigenproblems, real roots of
 *        low-degree polynomials, and reproducible random directions.
 */
#pragma once

#include "cylfit/types.hpp"

#include <random>

namespace cylfit {

/// Eigendecomposition of a symmetric 3x3 matrix.
/// Eigenvalues descending; eigenvector matrix orthogonal with det +1.
/// Reconstruction Q diag(mu) Q' matches A to 1e-12 * ||A||.
Spectrum3 eig_sym3(const Matrix3d& a);

/// All real roots of sum_k coeffs[k] x^k (ascending coefficients), degree <= 6.
/// Leading coefficients with |a_k| <= 1e-14 * max|a| are trimmed first;
/// an all-(near-)zero polynomial raises AllCoefficientsZero.
/// Roots are Newton-polished, deduplicated at 1e-9 relative spacing, ascending.
RealRoots real_roots(const std::vector<double>& coeffs);

/// Deterministic random stream; per-start streams derive from (seed, index)
/// so multi-start work is reproducible and order-independent.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    static Rng for_start(std::uint64_t seed, std::uint64_t start_index);

    /// Uniform double in [0, 1), from the top 53 bits of the generator.
    double uniform();
    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi);

private:
    std::mt19937_64 gen_;
};

/// Isotropic unit vector, by rejection sampling from the cube.
Vector3d random_unit_vector(Rng& rng);

}  // namespace cylfit
