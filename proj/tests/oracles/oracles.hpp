#pragma once

// Independent reference solvers used only by tests and the validation
// suites. These deliberately do not call into the solver modules they check:
// transforms, root finding, and closed forms are reimplemented locally.

#include "ksjko/fields.hpp"
#include "ksjko/potentials.hpp"

namespace ksjko {
namespace oracles {

struct OracleResult {
    Real value = 0.0;
    Real error_bound = 0.0;
    std::string method;
};

/// Logistic closed form for F'(s) = beta s - alpha (r = 2, alpha > 0):
/// rho(t) = alpha rho0 e^{alpha t} / (alpha + beta rho0 (e^{alpha t} - 1)).
Real logistic_exact(Real rho0, Real alpha, Real beta, Real t);

/// Classic fourth-order integration of rho' = -rho F'(rho); the error bound
/// comes from step halving.
OracleResult rk4_reaction(Real rho0, const ReactionSpec& F, Real t, int steps);

/// Semi-implicit Crank-Nicolson reference for the chi = 0 system with linear
/// diffusion: trapezoidal diffusion in a locally built cosine basis, explicit
/// reaction. steps = round(t / tau_ref).
DensityField crank_nicolson_rd(const DensityField& rho0, const ReactionSpec& F, Real tau_ref,
                               Real t);

/// Exact solution of the semi-discrete pure-diffusion system (truncated
/// cosine series with the discrete eigenvalues); used to self-test the CN
/// integrator.
DensityField heat_series(const DensityField& rho0, Real t);

struct ChiStarBruteForce {
    Real value = 0.0;
    bool unbounded = false;
};

/// sup over a log-spaced M grid of min(M / eta_M, M / rho0_linf), with
/// divergence detection at very large M.
ChiStarBruteForce chi_star_bruteforce(Real rho0_linf, Real alpha, Real beta, Real r,
                                      int grid_points = 10000);

/// Pure-bisection inverse of s (1 + tau F'(s)/2)^2, independent of the
/// production Newton path.
Real j_inverse_bisect(Real rho_val, Real tau, const ReactionSpec& F);

/// Restriction of a fine cell-averaged field to a factor-times-coarser grid.
DensityField block_average(const DensityField& fine, int factor);

}  // namespace oracles
}  // namespace ksjko
