#pragma once

#include <optional>
#include <vector>

#include "ksjko/elliptic.hpp"
#include "ksjko/fields.hpp"
#include "ksjko/potentials.hpp"

namespace ksjko {

struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};
struct CapInfeasibleError : SolverError {
    explicit CapInfeasibleError(const std::string& what) : SolverError(what) {}
};

struct ModelParams {
    Real chi = 0.0;
    elliptic::EllipticConfig elliptic_cfg{};
    EntropySpec entropy{};
    ReactionSpec reaction{};
};

namespace jko {

enum class W2Backend { quantile_1d, entropic };

struct W2StepConfig {
    W2Backend backend = W2Backend::quantile_1d;
    Real tau = 0.01;
    int outer_fixed_point_iters = 3;
    std::vector<Real> eps_schedule;  // empty: geometric 1e-1 h^2 .. 1e-3 h^2, 5 stages
    Real inner_tol = 1e-7;           // L1 stop for the chemoattractant refresh
    int quantile_count = 0;          // 0: 4N
    int max_inner_iters = 6000;      // projected-gradient iterations per inner solve
    int max_scaling_iters = 40000;   // scaling iterations per epsilon stage

    Real density_cap(Real chi) const { return chi > 0.0 ? 1.0 / (tau * chi) : kInf; }
    std::vector<Real> effective_eps_schedule(Real cell_width) const;
};

struct W2StepDiagnostics {
    Real w2_sq = 0.0;              // metric increment of the accepted step
    Real objective_initial = 0.0;  // E1 of the data
    Real objective_final = 0.0;    // E1 + W2^2/(2 tau) of the result
    int outer_iters_used = 0;
    Real outer_gap_l1 = 0.0;  // fixed-point gap of the chemoattractant refresh
    bool returned_input = false;
};

/// Warm-start state carried across scheme steps.
struct W2StepWorkspace {
    Eigen::ArrayXd f, g;            // entropic potentials
    Eigen::ArrayXd f_prev, g_prev;  // one step back, for linear extrapolation
    Array faces;                    // quantile face positions
    bool has_faces = false;
    bool has_potentials = false;
    bool has_history = false;
};

/// One Wasserstein minimizing-movement step: approximately minimize
/// E1(mu) + W2^2(g, mu)/(2 tau) over {0 <= mu <= 1/(tau chi), |mu| = |g|}.
/// The chemoattractant is frozen per outer pass, which majorizes the concave
/// coupling term, so the returned iterate never increases the objective
/// relative to the data.
DensityField w2_step(const DensityField& g, const ModelParams& model, const W2StepConfig& cfg,
                     W2StepDiagnostics* diag = nullptr, W2StepWorkspace* ws = nullptr);

struct ELResidualReport {
    Real l_estimate = 0.0;
    Real max_residual = 0.0;
    Real cap_active_fraction = 0.0;
    Real complementarity_defect = 0.0;
};

/// Residual of the step's first-order conditions: U'(rho) - chi c[rho] +
/// phi/(2 tau) should be constant on the inactive set, with a nonnegative
/// pressure supported where the density cap binds.
ELResidualReport w2_step_el_residual(const DensityField& rho, const DensityField& g,
                                     const ModelParams& model, Real tau);

/// Fisher-Rao minimizing-movement step; exact cellwise inverse of
/// J_tau(s) = s (1 + tau F'(s)/2)^2. Zero cells stay exactly zero.
DensityField fr_step(const DensityField& rho, const ReactionSpec& F, Real tau);

struct FrStepChecks {
    Real linf_before = 0.0, linf_after = 0.0;
    Real linf_bound = 0.0;   // eta_M or the contraction bound, per branch
    bool contraction_branch = false;
    Real linf_margin = 0.0;  // bound + tol - observed
    Real mass_before = 0.0, mass_after = 0.0;
    Real mass_bound = 0.0;
    Real mass_margin = 0.0;
    bool pass() const { return linf_margin >= 0.0 && mass_margin >= 0.0; }
};

/// Branch L-inf inequality and mass recurrence for one Fisher-Rao step.
FrStepChecks fr_step_estimates(const DensityField& rho, const DensityField& rho_hat,
                               const ReactionSpec& F, Real tau, Real M);

/// Drift-diffusion energy: int U(rho) - (chi/2) <rho, c[rho]>. The pairing
/// form of the chemical energy agrees with the field integral of the
/// screened equation and is exactly quadratic in rho for the discrete solve.
Real energy_e1(const DensityField& rho, const ModelParams& model);
/// Reaction energy int F(rho).
Real energy_e2(const DensityField& rho, const ReactionSpec& F);

}  // namespace jko
}  // namespace ksjko
