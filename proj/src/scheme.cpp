#include "ksjko/scheme.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace ksjko {
namespace scheme {

std::string to_string(RunStatus s) {
    switch (s) {
        case RunStatus::completed: return "completed";
        case RunStatus::blowup_sentinel: return "blowup_sentinel";
        case RunStatus::threshold_violation: return "threshold_violation";
        case RunStatus::solver_failure: return "solver_failure";
    }
    return "?";
}

namespace {

ThresholdReport make_report(const DensityField& rho0, const SchemeConfig& cfg) {
    const Real k3 = elliptic::empirical_k3(rho0.grid, cfg.model.elliptic_cfg, 32);
    return compute_thresholds(cfg.model.reaction, cfg.model.entropy, linf(rho0), mass(rho0),
                              rho0.grid.measure(), cfg.model.chi, cfg.lambda, rho0.grid.dim,
                              cfg.t_final, k3);
}

Real sentinel_level(const std::optional<ThresholdReport>& rep, const DensityField& rho0,
                    const ReactionSpec& F) {
    if (rep) return 10.0 * rep->C1;
    // outside the admissible chi range C1 is unavailable; fall back to a
    // comparable scale built from the M = 1 absorption level
    return 10.0 * 2.0 * std::max(eta(1.0, F), linf(rho0));
}

}  // namespace

Trajectory run(const DensityField& rho0, const SchemeConfig& cfg) {
    if (mass(rho0) <= 0.0) throw std::invalid_argument("scheme::run: rho0 has zero mass");
    if (cfg.tau <= 0.0 || cfg.t_final <= 0.0)
        throw std::invalid_argument("scheme::run: tau and t_final must be > 0");

    Trajectory traj;
    traj.tau = cfg.tau;
    traj.thresholds = cfg.thresholds;
    if (!traj.thresholds) {
        try {
            traj.thresholds = make_report(rho0, cfg);
        } catch (const std::exception&) {
            traj.thresholds.reset();  // exploration outside the admissible regime
        }
    }
    if (cfg.enforce_thresholds) {
        if (!traj.thresholds)
            throw ThresholdViolationError(
                "scheme::run: thresholds unavailable (lambda*chi >= chi_star?)");
        const ThresholdReport& rep = *traj.thresholds;
        if (!(cfg.tau < rep.tau_admissible())) {
            std::ostringstream os;
            os << "scheme::run: tau " << cfg.tau << " not below admissible "
               << rep.tau_admissible();
            throw ThresholdViolationError(os.str());
        }
        const Real headroom =
            cfg.tau * cfg.model.chi * cfg.lambda * std::max(rep.eta_Mstar, rep.rho0_linf);
        if (!(headroom < 1.0))
            throw ThresholdViolationError("scheme::run: cap headroom violated");
    }

    const int n_steps = static_cast<int>(std::floor(cfg.t_final / cfg.tau + 1e-9));
    const Real sentinel = sentinel_level(traj.thresholds, rho0, cfg.model.reaction);

    jko::W2StepConfig w2cfg = cfg.w2cfg;
    w2cfg.tau = cfg.tau;
    jko::W2StepWorkspace ws;

    traj.full_steps.push_back(rho0);
    DensityField cur = rho0;
    for (int k = 0; k < n_steps; ++k) {
        jko::W2StepDiagnostics wdiag;
        DensityField half = cur, full = cur;
        try {
            half = jko::w2_step(cur, cfg.model, w2cfg, &wdiag, &ws);
            full = jko::fr_step(half, cfg.model.reaction, cfg.tau);
        } catch (const SolverError& err) {
            traj.status = RunStatus::solver_failure;
            traj.failed_step = k;
            traj.status_detail = err.what();
            return traj;
        }

        StepDiagnostics d;
        d.step = k + 1;
        d.time = (k + 1) * cfg.tau;
        d.mass = mass(full);
        d.linf = linf(full);
        d.E1 = jko::energy_e1(full, cfg.model);
        d.E2 = jko::energy_e2(full, cfg.model.reaction);
        const Real w2_inc =
            cur.grid.dim == 1 ? metrics::w2_distance(cur, half) : std::sqrt(wdiag.w2_sq);
        const Real fr_inc = metrics::fr_distance(half, full);
        d.w2_inc = w2_inc;
        d.fr_inc = fr_inc;
        d.diss_slack_w2 = jko::energy_e1(cur, cfg.model) - jko::energy_e1(half, cfg.model) -
                          w2_inc * w2_inc / (2.0 * cfg.tau);
        d.diss_slack_fr = jko::energy_e2(half, cfg.model.reaction) - d.E2 -
                          fr_inc * fr_inc / (2.0 * cfg.tau);
        if (cfg.record_el_residual && cur.grid.dim == 1)
            d.el_residual =
                jko::w2_step_el_residual(half, cur, cfg.model, cfg.tau).max_residual;

        traj.half_steps.push_back(half);
        traj.c_fields.push_back(cfg.model.chi > 0.0
                                    ? elliptic::solve(half, cfg.model.elliptic_cfg)
                                    : ScalarField::zero(half.grid));
        traj.full_steps.push_back(full);
        traj.times.push_back(d.time);
        traj.diagnostics.push_back(d);
        cur = full;

        if (d.linf > sentinel) {
            traj.status = RunStatus::blowup_sentinel;
            traj.failed_step = k;
            traj.status_detail = "L-inf exceeded the blow-up sentinel";
            return traj;
        }
    }
    traj.status = RunStatus::completed;
    return traj;
}

BoundCheck check_uniform_bounds(const Trajectory& traj, const ThresholdReport& rep,
                                Real inner_tol) {
    BoundCheck out;
    const Real tol = 1e-6 + inner_tol;
    const Real full_bound = std::max(rep.eta_Mstar, rep.rho0_linf) * (1.0 + tol);
    const Real half_bound = rep.C1 * (1.0 + tol);
    for (size_t k = 0; k < traj.full_steps.size(); ++k) {
        const Real margin = full_bound - linf(traj.full_steps[k]);
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.worst_index = static_cast<int>(k);
        }
        if (margin < 0.0) out.pass = false;
    }
    for (size_t k = 0; k < traj.half_steps.size(); ++k) {
        const Real margin = half_bound - linf(traj.half_steps[k]);
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.worst_index = static_cast<int>(k);
        }
        if (margin < 0.0) out.pass = false;
    }
    out.detail = out.pass ? "all iterates within the uniform bounds"
                          : "uniform bound violated";
    return out;
}

BoundCheck check_l1_bound(const Trajectory& traj, const ThresholdReport& rep,
                          const ReactionSpec& F) {
    BoundCheck out;
    for (size_t k = 0; k < traj.full_steps.size(); ++k) {
        const Real margin = rep.xi + 1e-8 - mass(traj.full_steps[k]);
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.worst_index = static_cast<int>(k);
        }
        if (margin < 0.0) out.pass = false;
    }
    // one-step recurrence through the reaction half of the splitting
    const XiReport xr = xi(rep.rho0_l1, F, rep.omega_measure);
    for (size_t k = 0; k + 1 < traj.full_steps.size(); ++k) {
        const Real m_in = mass(traj.half_steps[k]);
        const Real m_out = mass(traj.full_steps[k + 1]);
        const Real bound = (m_in + traj.tau * xr.B_eps) / (1.0 + traj.tau * xr.A_eps);
        const Real margin = bound + 1e-8 - m_out;
        if (margin < out.worst_margin) {
            out.worst_margin = margin;
            out.worst_index = static_cast<int>(k);
        }
        if (margin < 0.0) out.pass = false;
    }
    out.detail = out.pass ? "masses within xi and the one-step recurrence"
                          : "mass bound violated";
    return out;
}

HolderCheck check_holder(const Trajectory& traj, const ThresholdReport& rep, int n_pairs,
                         unsigned seed) {
    HolderCheck out;
    out.c6 = rep.C6;
    const int n = static_cast<int>(traj.diagnostics.size());
    if (n < 1) return out;

    // per-step chain bounds sqrt(2 (W2^2 + FR^2)) on the full-step curve
    std::vector<Real> link(n);
    for (int k = 0; k < n; ++k) {
        const auto& d = traj.diagnostics[k];
        link[k] = std::sqrt(2.0 * (d.w2_inc * d.w2_inc + d.fr_inc * d.fr_inc));
        const Real direct =
            metrics::wfr_upper_bound(traj.full_steps[k], traj.full_steps[k + 1]);
        const Real best = std::min(direct, link[k]);
        if (best * best > 2.0 * (d.w2_inc * d.w2_inc + d.fr_inc * d.fr_inc) *
                              (1.0 + 1e-12) + 1e-30)
            out.per_step_pythagorean_ok = false;
    }
    std::vector<Real> chain(n + 1, 0.0);
    for (int k = 0; k < n; ++k) chain[k + 1] = chain[k] + link[k];

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, n);
    for (int p = 0; p < n_pairs; ++p) {
        int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        const Real telescoped = chain[b] - chain[a];
        const Real direct =
            metrics::wfr_upper_bound(traj.full_steps[a], traj.full_steps[b]);
        const Real ub = std::min(direct, telescoped);
        const Real dt = (b - a) * traj.tau;
        out.max_ratio = std::max(out.max_ratio, ub * ub / (dt + traj.tau));
    }
    out.pass = out.max_ratio <= out.c6 * (1.0 + 1e-9);
    return out;
}

FluxCheck check_flux_bound(const Trajectory& traj, const ThresholdReport& rep,
                           const EntropySpec& entropy) {
    FluxCheck out;
    out.c9 = rep.C9;
    for (size_t k = 0; k < traj.half_steps.size(); ++k) {
        const DensityField& half = traj.half_steps[k];
        Array psi_vals(half.values.size());
        for (Eigen::Index i = 0; i < psi_vals.size(); ++i)
            psi_vals[i] = entropy.psi(half.values[i]);
        ScalarField psi_field(half.grid, std::move(psi_vals));
        const auto grads = gradient(psi_field);
        Real l2sq = grads[0].values.square().sum();
        if (half.grid.dim == 2) l2sq += grads[1].values.square().sum();
        out.flux_l2_sq += traj.tau * l2sq * half.grid.cell_measure();
    }
    out.slack = out.c9 - out.flux_l2_sq;
    out.pass = out.flux_l2_sq <= out.c9;
    return out;
}

TestFunction TestFunction::one() {
    return {"one", [](Real) { return 1.0; }, [](Real) { return 0.0; }};
}
TestFunction TestFunction::parabola(Real L) {
    return {"parabola", [L](Real x) { return x * (L - x); }, [L](Real x) { return L - 2.0 * x; }};
}
TestFunction TestFunction::cosine(Real L, int mode) {
    const Real w = mode * 3.14159265358979323846 / L;
    return {"cosine", [w](Real x) { return std::cos(w * x); },
            [w](Real x) { return -w * std::sin(w * x); }};
}

Real weak_residual(const Trajectory& traj, const ModelParams& model, const TestFunction& phi,
                   int n1, int n2) {
    const int n = static_cast<int>(traj.diagnostics.size());
    if (!(0 <= n1 && n1 < n2 && n2 <= n))
        throw std::invalid_argument("weak_residual: need 0 <= n1 < n2 <= steps");
    const GridSpec& g = traj.full_steps.front().grid;
    if (g.dim != 1) throw std::invalid_argument("weak_residual: 1D trajectories only");
    const Real h = g.cell_measure();
    const int nc = g.cells[0];

    Array phi_v(nc), phi_d(nc);
    for (int i = 0; i < nc; ++i) {
        phi_v[i] = phi.value(g.center(0, i));
        phi_d[i] = phi.deriv(g.center(0, i));
    }

    Real lhs = ((traj.full_steps[n2].values - traj.full_steps[n1].values) * phi_v).sum() * h;

    Real rhs = 0.0;
    for (int k = n1; k < n2; ++k) {
        const DensityField& full = traj.full_steps[k + 1];
        const DensityField& half = traj.half_steps[k];

        // mixed reaction term
        Real reaction = 0.0;
        for (int i = 0; i < nc; ++i) {
            const Real sf = std::sqrt(full.values[i]);
            const Real sh = std::sqrt(half.values[i]);
            reaction += 0.5 * sf * (sf + sh) * model.reaction.f1(full.values[i]) * phi_v[i];
        }
        reaction *= h;

        // flux of the pressure-like quantity psi(rho) = rho U'(rho) - U(rho)
        Array psi_vals(nc);
        for (int i = 0; i < nc; ++i) psi_vals[i] = model.entropy.psi(half.values[i]);
        ScalarField psi_field(g, std::move(psi_vals));
        Array grad_psi = gradient(psi_field)[0].values;
        const Real flux = (phi_d * grad_psi).sum() * h;

        Real chemo = 0.0;
        if (model.chi > 0.0) {
            elliptic::Solution sol = elliptic::solve_full(half, model.elliptic_cfg);
            chemo = model.chi *
                    (half.values * sol.grad_c[0].values * phi_d).sum() * h;
        }
        rhs += -traj.tau * (reaction + flux - chemo);
    }
    return std::abs(lhs - rhs);
}

std::string diagnostics_csv(const Trajectory& traj) {
    std::ostringstream os;
    os << "step,time,mass,linf,E1,E2,w2_inc,fr_inc,el_residual,diss_slack_w2,diss_slack_fr\n";
    for (const auto& d : traj.diagnostics) {
        os << d.step << ',' << format_real(d.time) << ',' << format_real(d.mass) << ','
           << format_real(d.linf) << ',' << format_real(d.E1) << ',' << format_real(d.E2) << ','
           << format_real(d.w2_inc) << ',' << format_real(d.fr_inc) << ','
           << format_real(d.el_residual) << ',' << format_real(d.diss_slack_w2) << ','
           << format_real(d.diss_slack_fr) << '\n';
    }
    return os.str();
}

}  // namespace scheme
}  // namespace ksjko
