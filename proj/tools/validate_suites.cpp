#include "validate_suites.hpp"

#include <cmath>
#include <future>
#include <random>

#include "ksjko/config.hpp"
#include "ksjko/jko.hpp"
#include "ksjko/metrics.hpp"
#include "ksjko/scheme.hpp"
#include "oracles.hpp"

namespace ksjko {
namespace validate {

namespace {

using Rows = std::vector<CheckRow>;

void add(Rows& rows, const std::string& name, const std::string& property, Real margin) {
    rows.push_back({name, property, margin, margin >= 0.0});
}

DensityField random_field(const GridSpec& g, std::mt19937_64& rng, Real hi = 2.0,
                          Real vacuum_fraction = 0.0) {
    std::uniform_real_distribution<Real> unif(0.0, hi);
    std::uniform_real_distribution<Real> coin(0.0, 1.0);
    Array v(g.size());
    for (Eigen::Index i = 0; i < v.size(); ++i)
        v[i] = coin(rng) < vacuum_fraction ? 0.0 : unif(rng);
    if (v.sum() <= 0.0) v[0] = hi;
    return DensityField(g, std::move(v));
}

RunConfig headline_config() {
    RunConfig c;
    c.dim = 1;
    c.lengths = {1.0};
    c.cells = {128};
    c.chi = 0.5;
    c.alpha = 1.0;
    c.beta = 1.0;
    c.r = 2.0;
    c.preset = "perturbed_uniform";
    c.amplitude = 0.2;
    c.mode = 1;
    c.backend = "quantile";
    c.enforce_thresholds = true;
    c.lambda = 1.01;
    return c;
}

Rows suite_lemmas() {
    Rows rows;

    // closed-form constants against independent evaluations
    {
        ReactionSpec F(1.0, 1.0, 1.5);
        add(rows, "eta-direct", "eta_M closed form at (M=2,a=1,b=1,r=1.5)",
            1e-12 - std::abs(eta(2.0, F) - 9.0));
        const Real boundary = std::pow(1.0 / (1.0 * 0.5), 2.0);  // = 4
        const Real left = chi_star(boundary * (1.0 - 1e-13), F);
        const Real right = chi_star(boundary * (1.0 + 1e-13), F);
        add(rows, "chi-star-continuity", "branch formulas agree at the case boundary",
            1e-9 - std::abs(left - right));
    }
    {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<Real> ur(1.05, 4.0), ua(0.0, 3.0), ub(0.1, 3.0),
            urho(0.05, 20.0);
        Real worst = kInf;
        for (int k = 0; k < 60; ++k) {
            const Real a = ua(rng), b = ub(rng), r = ur(rng), rho = urho(rng);
            const auto bf = oracles::chi_star_bruteforce(rho, a, b, r, 4000);
            const Real cs = chi_star(rho, ReactionSpec(a, b, r));
            if (std::isinf(cs)) {
                worst = std::min(worst, bf.unbounded ? 1.0 : -1.0);
            } else {
                worst = std::min(worst, 1e-3 - std::abs(bf.value - cs) / cs);
            }
        }
        add(rows, "chi-star-bruteforce", "closed form matches the grid supremum", worst);
    }
    {
        ReactionSpec F(0.7, 1.3, 2.4);
        const Real tau = 0.31;
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<Real> us(0.0, 40.0);
        Real worst = kInf;
        for (int k = 0; k < 2000; ++k) {
            const Real s = us(rng);
            const Real rt = J_tau_inverse(J_tau(s, tau, F), tau, F);
            worst = std::min(worst, 1e-10 - std::abs(rt - s));
        }
        add(rows, "j-tau-roundtrip", "reaction proximal map inverts its forward map", worst);
    }

    // headline run: perturbed uniform state near the admissible chi range
    RunConfig rc = headline_config();
    scheme::SchemeConfig sc = make_scheme_config(rc);
    DensityField rho0 = build_initial(rc);
    const Real k3 = elliptic::empirical_k3(rho0.grid, sc.model.elliptic_cfg, 32);
    ThresholdReport rep =
        compute_thresholds(sc.model.reaction, sc.model.entropy, linf(rho0), mass(rho0),
                           rho0.grid.measure(), sc.model.chi, sc.lambda, 1, /*t_final*/ 1.5, k3);
    sc.tau = 0.5 * rep.tau_admissible();
    sc.t_final = 60 * sc.tau;
    rep = compute_thresholds(sc.model.reaction, sc.model.entropy, linf(rho0), mass(rho0),
                             rho0.grid.measure(), sc.model.chi, sc.lambda, 1, sc.t_final, k3);
    sc.thresholds = rep;
    sc.w2cfg.tau = sc.tau;
    scheme::Trajectory traj = scheme::run(rho0, sc);
    add(rows, "run-completed", "headline scenario finishes all steps",
        traj.status == scheme::RunStatus::completed ? 1.0 : -1.0);

    const auto ub = scheme::check_uniform_bounds(traj, rep, sc.w2cfg.inner_tol);
    add(rows, "uniform-linf-bound", "iterates stay below the absorption level", ub.worst_margin);
    const auto l1 = scheme::check_l1_bound(traj, rep, sc.model.reaction);
    add(rows, "l1-xi-bound", "masses stay below xi with the one-step recurrence",
        l1.worst_margin);

    Real worst_w2 = kInf, worst_fr = kInf, worst_gap = kInf, worst_e1gap = kInf,
         worst_e2gap = kInf;
    for (size_t k = 0; k < traj.diagnostics.size(); ++k) {
        const auto& d = traj.diagnostics[k];
        const Real e_scale = 1e-6 * (1.0 + std::abs(d.E1));
        worst_w2 = std::min(worst_w2, d.diss_slack_w2 + e_scale);
        worst_fr = std::min(worst_fr, d.diss_slack_fr + 1e-8);
        const Real gap =
            linf(DensityField(traj.full_steps[k + 1].grid,
                              (traj.full_steps[k + 1].values - traj.half_steps[k].values).abs()));
        worst_gap = std::min(worst_gap, sc.tau * rep.C2 + 1e-10 - gap);
        const Real e1_full = jko::energy_e1(traj.full_steps[k + 1], sc.model);
        const Real e1_half = jko::energy_e1(traj.half_steps[k], sc.model);
        worst_e1gap = std::min(worst_e1gap, (rep.C3 + rep.C4) * sc.tau + 1e-9 -
                                                (e1_full - e1_half));
        const Real e2_full = jko::energy_e2(traj.full_steps[k + 1], sc.model.reaction);
        const Real e2_half = jko::energy_e2(traj.half_steps[k], sc.model.reaction);
        worst_e2gap = std::min(worst_e2gap, rep.C5 * sc.tau + 1e-9 - (e2_half - e2_full));
    }
    add(rows, "w2-step-dissipation", "drift-diffusion step never raises its objective",
        worst_w2);
    add(rows, "fr-step-dissipation", "reaction step never raises its objective", worst_fr);
    add(rows, "half-full-gap", "reaction step moves the density at most tau C2 in sup norm",
        worst_gap);
    add(rows, "e1-gap-constant", "reaction step raises the drift energy at most (C3+C4) tau",
        worst_e1gap);
    add(rows, "e2-gap-constant", "diffusion step raises the reaction energy at most C5 tau",
        worst_e2gap);

    const auto hc = scheme::check_holder(traj, rep, 100);
    add(rows, "wfr-hoelder", "squared distance grows at most linearly in elapsed time",
        hc.c6 - hc.max_ratio);
    add(rows, "per-step-pythagorean", "per-step bound through the intermediate iterate",
        hc.per_step_pythagorean_ok ? 1.0 : -1.0);
    const auto fc = scheme::check_flux_bound(traj, rep, sc.model.entropy);
    add(rows, "flux-l2-bound", "time-integrated pressure flux stays below C9", fc.slack);

    // Fisher-Rao branch inequality on random fields
    {
        std::mt19937_64 rng(23);
        GridSpec g(1.0, 64);
        ReactionSpec F(1.0, 1.0, 2.0);
        const Real tau = 0.05, M = 2.0;
        Real worst = kInf;
        for (int k = 0; k < 100; ++k) {
            DensityField rho = random_field(g, rng, 5.0, 0.2);
            DensityField hat = jko::fr_step(rho, F, tau);
            const auto chk = jko::fr_step_estimates(rho, hat, F, tau, M);
            worst = std::min(worst, std::min(chk.linf_margin, chk.mass_margin));
        }
        add(rows, "fr-branch-inequality", "sup-norm branch bound and mass recurrence", worst);
    }

    // steady state: constant trajectory and tiny weak residual
    {
        RunConfig scc;
        scc.cells = {64};
        scc.chi = 0.3;
        scc.alpha = 1.0;
        scc.beta = 1.0;
        scc.r = 2.0;
        scc.preset = "uniform";
        scc.value = 1.0;  // carrying capacity
        scc.tau = 0.02;
        scc.t_final = 0.4;
        scc.backend = "quantile";
        scheme::SchemeConfig s2 = make_scheme_config(scc);
        scheme::Trajectory t2 = scheme::run(build_initial(scc), s2);
        Real dev = 0.0;
        for (const auto& f : t2.full_steps)
            dev = std::max(dev, (f.values - 1.0).abs().maxCoeff());
        add(rows, "steady-state-fixed", "carrying-capacity state is a fixed point",
            1e-9 - dev);
        const Real wr = scheme::weak_residual(t2, s2.model,
                                              scheme::TestFunction::cosine(1.0), 0,
                                              static_cast<int>(t2.diagnostics.size()));
        add(rows, "weak-residual-steady", "weak form balances on the steady state",
            1e-8 - wr);
    }
    return rows;
}

Rows suite_metrics() {
    Rows rows;
    GridSpec g(2.0, 128);
    std::mt19937_64 rng(42);

    {  // translation example
        Array a = Array::Zero(128), b = Array::Zero(128);
        for (int i = 0; i < 64; ++i) a[i] = 1.0;
        for (int i = 64; i < 128; ++i) b[i] = 1.0;
        const Real w2 = metrics::w2_distance(DensityField(g, a), DensityField(g, b));
        add(rows, "w2-translation", "unit translation of a block costs exactly one",
            1e-10 - std::abs(w2 - 1.0));
    }

    Real tri = kInf, dual = kInf, fr_tri = kInf, cmp = kInf;
    for (int k = 0; k < 200; ++k) {
        DensityField x = random_field(g, rng, 2.0, 0.1);
        DensityField y = random_field(g, rng, 2.0, 0.1);
        DensityField z = random_field(g, rng, 2.0, 0.1);
        const Real mx = mass(x);
        y.values *= mx / mass(y);
        z.values *= mx / mass(z);
        const Real dxy = metrics::w2_distance(x, y);
        const Real dyz = metrics::w2_distance(y, z);
        const Real dxz = metrics::w2_distance(x, z);
        tri = std::min(tri, dxy + dyz - dxz + 1e-8);

        const auto r = metrics::w2_1d(x, y);
        dual = std::min(dual, 1e-6 - std::abs(r.dual_value - r.w2_sq) /
                                        std::max(r.w2_sq, 1e-30));

        const Real fxy = metrics::fr_distance(x, y);
        const Real fyz = metrics::fr_distance(y, z);
        const Real fxz = metrics::fr_distance(x, z);
        fr_tri = std::min(fr_tri, fxy + fyz - fxz + 1e-10);

        const Real wub = metrics::wfr_upper_bound(x, y);
        cmp = std::min(cmp, std::min(fxy - wub, dxy - wub) + 1e-10);
    }
    add(rows, "w2-triangle", "transport distance triangle inequality", tri);
    add(rows, "kantorovich-duality", "potential pair attains the transport cost", dual);
    add(rows, "fr-triangle", "reaction distance triangle inequality", fr_tri);
    add(rows, "wfr-comparison", "upper bound below both transport and reaction distances",
        cmp);

    {  // entropic backend against the exact 1D value, symmetry, monotonicity
        GridSpec gg(2.0, 128);
        Array a = Array::Zero(128), b = Array::Zero(128);
        for (int i = 0; i < 64; ++i) a[i] = 1.0;
        for (int i = 64; i < 128; ++i) b[i] = 1.0;
        DensityField A(gg, a), B(gg, b);
        const auto e1 = metrics::w2_entropic(A, B, 1e-3);
        add(rows, "entropic-vs-exact", "entropic cost near the exact squared distance",
            0.05 - std::abs(e1.cost - 1.0));
        const auto e2 = metrics::w2_entropic(B, A, 1e-3);
        add(rows, "entropic-symmetry", "cost independent of the argument order",
            1e-10 - std::abs(e1.cost - e2.cost));
        const auto coarse = metrics::w2_entropic(A, B, 2e-3);
        add(rows, "entropic-monotone", "cost nonincreasing as the regularization decreases",
            coarse.cost - e1.cost + 1e-10);
    }
    return rows;
}

Rows suite_convergence() {
    Rows rows;

    {  // spatially uniform logistic decay against the closed form
        Real prev_err = kInf;
        Real worst = kInf, ratio_margin = kInf;
        for (Real tau : {0.1, 0.05, 0.025}) {
            RunConfig rc;
            rc.cells = {16};
            rc.chi = 0.0;
            rc.alpha = 1.0;
            rc.beta = 1.0;
            rc.r = 2.0;
            rc.preset = "uniform";
            rc.value = 0.5;
            rc.tau = tau;
            rc.t_final = 1.0;
            scheme::SchemeConfig sc = make_scheme_config(rc);
            scheme::Trajectory traj = scheme::run(build_initial(rc), sc);
            const Real got = traj.full_steps.back().values[0];
            const Real want = oracles::logistic_exact(0.5, 1.0, 1.0, 1.0);
            const Real err = std::abs(got - want);
            worst = std::min(worst, 5.0 * tau - err);
            if (std::isfinite(prev_err)) {
                const Real ratio = prev_err / err;
                ratio_margin = std::min(ratio_margin,
                                        std::min(ratio - 1.6, 2.4 - ratio));
            }
            prev_err = err;
        }
        add(rows, "logistic-error", "uniform run tracks the logistic closed form", worst);
        add(rows, "logistic-order", "error halves with the step size", ratio_margin);
    }

    {  // chi = 0 reaction-diffusion against the Crank-Nicolson reference
        Real prev = kInf, worst_dec = kInf;
        const Real taus[3] = {0.02, 0.01, 0.005};
        const int cells[3] = {64, 128, 256};
        std::vector<Real> errs;
        for (int lvl = 0; lvl < 3; ++lvl) {
            RunConfig rc;
            rc.lengths = {4.0};
            rc.cells = {cells[lvl]};
            rc.chi = 0.0;
            rc.alpha = 0.0;
            rc.beta = 1e-3;
            rc.r = 2.0;
            rc.preset = "bump";
            rc.value = 0.2;
            rc.amplitude = 1.0;
            rc.width = 0.1;
            rc.tau = taus[lvl];
            rc.t_final = 0.5;
            scheme::SchemeConfig sc = make_scheme_config(rc);
            DensityField rho0 = build_initial(rc);
            scheme::Trajectory traj = scheme::run(rho0, sc);

            GridSpec fine(rc.lengths[0], cells[lvl] * 8);
            RunConfig rf = rc;
            rf.cells = {cells[lvl] * 8};
            DensityField rho0_fine = build_initial(rf);
            DensityField ref_fine = oracles::crank_nicolson_rd(
                rho0_fine, sc.model.reaction, taus[lvl] / 8.0, 0.5);
            DensityField ref = oracles::block_average(ref_fine, 8);

            DensityField diff(traj.full_steps.back().grid,
                              (traj.full_steps.back().values - ref.values).abs());
            const Real err = lp_norm(diff, 2.0);
            errs.push_back(err);
            if (std::isfinite(prev)) worst_dec = std::min(worst_dec, prev - err);
            prev = err;
        }
        add(rows, "pde-error-decreases", "error shrinks under joint step/grid refinement",
            worst_dec);
        const Real order = std::log2(errs[0] / errs[2]) / 2.0;
        add(rows, "pde-order", "empirical order at least 0.8 in the step size",
            order - 0.8);
    }

    {  // weak-form residual refinement; three closed-form test functions
        const Real taus[3] = {0.02, 0.01, 0.005};
        const int cells[3] = {64, 128, 256};
        std::vector<scheme::Trajectory> trajs;
        ModelParams model;
        for (int lvl = 0; lvl < 3; ++lvl) {
            RunConfig rc;
            rc.lengths = {4.0};
            rc.cells = {cells[lvl]};
            rc.chi = 0.0;
            rc.alpha = 0.0;
            rc.beta = 1e-3;
            rc.r = 2.0;
            rc.preset = "bump";
            rc.tau = taus[lvl];
            rc.t_final = 0.5;
            scheme::SchemeConfig sc = make_scheme_config(rc);
            model = sc.model;
            trajs.push_back(scheme::run(build_initial(rc), sc));
        }
        // a test function passes if its residual is at the tolerance floor
        // on every level or decreases monotonically with order >= 1
        Real worst = kInf;
        for (const auto& phi :
             {scheme::TestFunction::one(), scheme::TestFunction::parabola(4.0),
              scheme::TestFunction::cosine(4.0)}) {
            std::vector<Real> errs;
            for (const auto& traj : trajs)
                errs.push_back(scheme::weak_residual(
                    traj, model, phi, 0, static_cast<int>(traj.diagnostics.size())));
            const Real peak = *std::max_element(errs.begin(), errs.end());
            if (peak <= 1e-8) {
                worst = std::min(worst, 1e-8 - peak);
                continue;
            }
            Real margin = kInf;
            for (int l = 1; l < 3; ++l) margin = std::min(margin, errs[l - 1] - errs[l]);
            const Real order = std::log2(errs[0] / errs[2]) / 2.0;
            worst = std::min(worst, std::min(margin, order - 1.0));
        }
        add(rows, "weak-residual-refinement",
            "weak-form mismatch at the floor or first order in the step size", worst);
    }
    return rows;
}

}  // namespace

std::vector<CheckRow> run_suite(const std::string& suite, int jobs) {
    (void)jobs;  // suites are small; scenario runs inside are already batched
    if (suite == "lemmas") return suite_lemmas();
    if (suite == "metrics") return suite_metrics();
    if (suite == "convergence") return suite_convergence();
    throw std::invalid_argument("unknown suite '" + suite + "'");
}

}  // namespace validate
}  // namespace ksjko
