#pragma once

#include <optional>
#include <vector>

#include "ksjko/fields.hpp"

namespace ksjko {
namespace metrics {

/// Monotone-rearrangement transport data between two 1D densities.
struct TransportPlan1D {
    Array source_quantiles;  // at K probability midpoints
    Array target_quantiles;
    Array map_values;        // T at source cell centers
};

/// Exact 1D transport solution. The potential is the Kantorovich potential
/// for the squared-distance cost, normalized to 0 at the left boundary; the
/// optimal map satisfies grad(phi) = 2 (id - T).
struct W2Result {
    Real w2 = 0.0;
    Real w2_sq = 0.0;
    TransportPlan1D plan;
    ScalarField potential;    // phi at cell centers
    ScalarField potential_c;  // c-transform of phi at cell centers
    Real dual_value = 0.0;    // int phi drho0 + int phi^c drho1 (mass coordinates)

    // T is affine between breakpoints; prefix integrals make phi exactly
    // piecewise quadratic.
    std::vector<Real> piece_x;      // piece left edges (last entry = domain end)
    std::vector<Real> piece_T;      // T at the left edge, from inside the piece
    std::vector<Real> piece_slope;  // dT/dx on the piece
    std::vector<Real> piece_I;      // int_0^{piece_x[k]} T dy

    Real integral_T(Real x) const;  // int_0^x T, exact
    Real phi_at(Real x) const;      // x^2 - 2 int_0^x T
    Real map_at(Real x) const;
    Real ctransform_at(Real y) const;  // min_x (x-y)^2 - phi(x), exact per piece
};

/// W2 via quantile functions (exact inversion of the piecewise-linear CDF).
/// Preconditions: 1D, equal grids, equal masses within 1e-10 relative, both
/// masses positive. quantile_count = 0 selects the default K = 4N.
W2Result w2_1d(const DensityField& rho0, const DensityField& rho1, int quantile_count = 0);
Real w2_distance(const DensityField& rho0, const DensityField& rho1);

struct SinkhornOptions {
    Real marginal_tol = 1e-9;   // L1 violation, relative to total mass
    int max_iters = 200000;     // across the internal annealing ladder
    bool anneal = true;         // warm-start from larger epsilon internally
};

struct SinkhornResult {
    Real cost = 0.0;  // plain entropic transport cost <gamma, C>
    int iterations = 0;
    Real marginal_violation = 0.0;
    Real eps = 0.0;
};

/// Entropic W2^2 surrogate by log-domain scaling iterations on the
/// squared-distance cost. The returned cost carries the usual
/// O(eps log(1/eps)) entropic bias.
SinkhornResult w2_entropic(const DensityField& rho0, const DensityField& rho1, Real eps,
                           const SinkhornOptions& opts = {});

/// Fisher-Rao distance, closed form with the cell measure as reference:
/// FR^2 = 4 int |sqrt(rho0) - sqrt(rho1)|^2.
Real fr_distance(const DensityField& rho0, const DensityField& rho1);
Real fr_distance_sq(const DensityField& rho0, const DensityField& rho1);

/// Upper bound for the Wasserstein-Fisher-Rao distance: the minimum over the
/// pure-reaction chain, the two transport-then-react chains through
/// mass-matched rescalings, and (for equal masses) W2 itself.
Real wfr_upper_bound(const DensityField& rho0, const DensityField& rho1);

}  // namespace metrics
}  // namespace ksjko
