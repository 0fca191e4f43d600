#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ksjko/jko.hpp"
#include "ksjko/metrics.hpp"

namespace ksjko {
namespace scheme {

struct SchemeConfig {
    Real tau = 0.01;
    Real t_final = 1.0;
    ModelParams model{};
    jko::W2StepConfig w2cfg{};
    bool enforce_thresholds = false;
    Real lambda = 1.01;
    std::optional<ThresholdReport> thresholds;  // computed on demand when absent
    bool record_el_residual = true;
};

enum class RunStatus { completed, blowup_sentinel, threshold_violation, solver_failure };
std::string to_string(RunStatus s);

struct ThresholdViolationError : SolverError {
    explicit ThresholdViolationError(const std::string& what) : SolverError(what) {}
};

struct StepDiagnostics {
    int step = 0;
    Real time = 0.0;
    Real mass = 0.0;
    Real linf = 0.0;
    Real E1 = 0.0, E2 = 0.0;
    Real w2_inc = 0.0, fr_inc = 0.0;
    Real el_residual = 0.0;
    Real diss_slack_w2 = 0.0, diss_slack_fr = 0.0;
};

struct Trajectory {
    Real tau = 0.0;
    std::vector<Real> times;                // (n+1) tau per step record
    std::vector<DensityField> full_steps;   // rho_0 .. rho_n
    std::vector<DensityField> half_steps;   // rho_{1/2} .. rho_{n-1/2}
    std::vector<ScalarField> c_fields;      // c[rho_{k+1/2}]
    std::vector<StepDiagnostics> diagnostics;
    RunStatus status = RunStatus::completed;
    std::string status_detail;
    std::optional<ThresholdReport> thresholds;
    int failed_step = -1;
};

/// Alternate the Wasserstein and Fisher-Rao steps for floor(T/tau)
/// iterations. Blow-up past 10 C1 ends the run with a labeled status rather
/// than an error; threshold violations throw before stepping.
Trajectory run(const DensityField& rho0, const SchemeConfig& cfg);

struct BoundCheck {
    bool pass = true;
    Real worst_margin = kInf;  // min over checks of (bound - observed)
    int worst_index = -1;
    std::string detail;
};

/// Full steps below max(eta, ||rho0||inf) (1 + tol), half steps below
/// C1 (1 + tol); tol = 1e-6 plus the solver inner tolerance.
BoundCheck check_uniform_bounds(const Trajectory& traj, const ThresholdReport& rep,
                                Real inner_tol);

/// Masses below xi + 1e-8 and the one-step mass recurrence at every step.
BoundCheck check_l1_bound(const Trajectory& traj, const ThresholdReport& rep,
                          const ReactionSpec& F);

struct HolderCheck {
    Real max_ratio = 0.0;  // max over pairs of WFR_ub^2 / (t - s + tau)
    Real c6 = 0.0;
    bool pass = true;
    bool per_step_pythagorean_ok = true;
};

/// Sampled-pair Hoelder bound against C6, using the better of the direct
/// two-field upper bound and the telescoped per-step chain.
HolderCheck check_holder(const Trajectory& traj, const ThresholdReport& rep, int n_pairs = 100,
                         unsigned seed = 7u);

struct FluxCheck {
    Real flux_l2_sq = 0.0;  // sum tau ||grad Psi(half)||_L2^2
    Real c9 = 0.0;
    Real slack = 0.0;
    bool pass = true;
};
FluxCheck check_flux_bound(const Trajectory& traj, const ThresholdReport& rep,
                           const EntropySpec& entropy);

/// Closed-form test functions for the weak-form residual.
struct TestFunction {
    std::string name;
    std::function<Real(Real)> value;
    std::function<Real(Real)> deriv;

    static TestFunction one();
    static TestFunction parabola(Real L);   // x (L - x)
    static TestFunction cosine(Real L, int mode = 1);
};

/// Mismatch of the discrete weak form over [n1 tau, n2 tau]: half-step
/// fields feed the flux terms, full steps the mixed reaction term.
Real weak_residual(const Trajectory& traj, const ModelParams& model, const TestFunction& phi,
                   int n1, int n2);

/// Diagnostics CSV with the columns
/// step,time,mass,linf,E1,E2,w2_inc,fr_inc,el_residual,diss_slack_w2,diss_slack_fr
std::string diagnostics_csv(const Trajectory& traj);

}  // namespace scheme
}  // namespace ksjko
