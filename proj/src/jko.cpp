#include "ksjko/jko.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ksjko/metrics.hpp"

namespace ksjko {
namespace jko {

namespace {

// ---------------------------------------------------------------------------
// shared helpers

Real weighted_median(std::vector<std::pair<Real, Real>>& value_weight) {
    if (value_weight.empty()) return 0.0;
    std::sort(value_weight.begin(), value_weight.end());
    Real total = 0.0;
    for (auto& vw : value_weight) total += vw.second;
    Real acc = 0.0;
    for (auto& vw : value_weight) {
        acc += vw.second;
        if (acc >= 0.5 * total) return vw.first;
    }
    return value_weight.back().first;
}

// Cubic Hermite interpolant of cell-center values with prescribed
// derivatives (the spectral gradient); linear extension past the end centers.
struct HermiteInterp {
    const GridSpec* grid;
    Array v, d;

    Real eval(Real x, Real* deriv = nullptr) const {
        const int n = grid->cells[0];
        const Real h = grid->cell_width(0);
        const Real x0 = 0.5 * h;
        if (n == 1 || x <= x0) {
            if (deriv) *deriv = d[0];
            return v[0] + d[0] * (x - x0);
        }
        const Real xe = grid->center(0, n - 1);
        if (x >= xe) {
            if (deriv) *deriv = d[n - 1];
            return v[n - 1] + d[n - 1] * (x - xe);
        }
        int i = static_cast<int>((x - x0) / h);
        i = std::clamp(i, 0, n - 2);
        const Real t = (x - grid->center(0, i)) / h;
        const Real t2 = t * t, t3 = t2 * t;
        const Real h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
        const Real h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
        if (deriv) {
            const Real g00 = (6 * t2 - 6 * t) / h, g10 = (3 * t2 - 4 * t + 1);
            const Real g01 = (-6 * t2 + 6 * t) / h, g11 = (3 * t2 - 2 * t);
            *deriv = g00 * v[i] + g10 * d[i] + g01 * v[i + 1] + g11 * d[i + 1];
        }
        return h00 * v[i] + h10 * h * d[i] + h01 * v[i + 1] + h11 * h * d[i + 1];
    }
};

// Pool-adjacent-violators: least-squares nondecreasing fit, unit weights.
void pav_nondecreasing(Array& r) {
    const int n = static_cast<int>(r.size());
    std::vector<Real> level(n), weight(n);
    std::vector<int> count(n);
    int top = -1;
    for (int i = 0; i < n; ++i) {
        ++top;
        level[top] = r[i];
        weight[top] = 1.0;
        count[top] = 1;
        while (top > 0 && level[top - 1] > level[top]) {
            const Real w = weight[top - 1] + weight[top];
            level[top - 1] = (weight[top - 1] * level[top - 1] + weight[top] * level[top]) / w;
            weight[top - 1] = w;
            count[top - 1] += count[top];
            --top;
        }
    }
    int pos = 0;
    for (int b = 0; b <= top; ++b)
        for (int k = 0; k < count[b]; ++k) r[pos++] = level[b];
}

// Exact quantile faces of a 1D density at the K+1 levels j*m/K.
Array quantile_faces(const DensityField& rho, int K) {
    const int n = rho.grid.cells[0];
    const Real h = rho.grid.cell_width(0);
    std::vector<Real> cum(n + 1, 0.0);
    for (int i = 0; i < n; ++i) cum[i + 1] = cum[i] + rho.values[i] * h;
    const Real m = cum[n];
    Array q(K + 1);
    for (int j = 0; j <= K; ++j) {
        const Real u = std::min(m, j * m / K);
        auto it = std::upper_bound(cum.begin(), cum.end(), u);
        int i = std::clamp(static_cast<int>(it - cum.begin()) - 1, 0, n - 1);
        if (j == K) {  // right edge of the support
            while (i > 0 && rho.values[i] <= 0.0 && cum[i] >= m) --i;
            q[j] = rho.values[i] > 0.0 ? i * h + std::min((u - cum[i]) / rho.values[i], h)
                                       : i * h;
            continue;
        }
        q[j] = rho.values[i] > 0.0 ? i * h + std::min((u - cum[i]) / rho.values[i], h) : i * h;
    }
    for (int j = 0; j < K; ++j) q[j + 1] = std::max(q[j + 1], q[j]);
    return q;
}

// Cell averages of the piecewise-constant density carried by quantile faces.
DensityField density_from_faces(const GridSpec& grid, const Array& q, Real m) {
    const int K = static_cast<int>(q.size()) - 1;
    const int n = grid.cells[0];
    const Real h = grid.cell_width(0);
    const Real w = m / K;
    Array cell = Array::Zero(n);
    for (int j = 0; j < K; ++j) {
        const Real a = q[j], b = q[j + 1];
        const Real len = b - a;
        if (len <= 0.0) {
            // zero-width segment: deposit as a narrow block one cell wide
            int i = std::clamp(static_cast<int>(a / h), 0, n - 1);
            cell[i] += w;
            continue;
        }
        int i0 = std::clamp(static_cast<int>(a / h), 0, n - 1);
        int i1 = std::clamp(static_cast<int>(b / h), 0, n - 1);
        for (int i = i0; i <= i1; ++i) {
            const Real lo = std::max(a, i * h), hi = std::min(b, (i + 1) * h);
            if (hi > lo) cell[i] += w * (hi - lo) / len;
        }
    }
    const Real total = cell.sum();
    if (total > 0.0) cell *= m / (total * h) * 1.0;  // exact mass in cell-average units
    return DensityField(grid, cell);
}

// ---------------------------------------------------------------------------
// inner solver, quantile parameterization (1D)

struct QuantileInner {
    const GridSpec* grid;
    Real tau, chi, w, L, delta_floor;
    const EntropySpec* U;
    Array qg;                    // data faces
    const HermiteInterp* chem;   // frozen chemoattractant, may be null
    Array omega;                 // trapezoid weights

    Real objective(const Array& q) const {
        const int K = static_cast<int>(q.size()) - 1;
        Real e = 0.0;
        for (int j = 0; j < K; ++j) {
            const Real dj = q[j + 1] - q[j];
            if (dj <= 0.0) return kInf;
            e += dj * U->u(w / dj);
        }
        Real pen = 0.0, chem_term = 0.0;
        for (int j = 0; j <= K; ++j) {
            const Real dq = q[j] - qg[j];
            pen += omega[j] * dq * dq;
            if (chem) chem_term += omega[j] * chem->eval(q[j]);
        }
        return e + pen / (2.0 * tau) - chi * chem_term;
    }

    void gradient(const Array& q, Array& grad) const {
        const int K = static_cast<int>(q.size()) - 1;
        grad.resize(K + 1);
        Real psi_prev = 0.0;
        for (int j = 0; j <= K; ++j) {
            const Real psi_next =
                j < K ? U->psi(w / std::max(q[j + 1] - q[j], 1e-300)) : 0.0;
            grad[j] = psi_next - psi_prev;
            psi_prev = psi_next;
            grad[j] += omega[j] * (q[j] - qg[j]) / tau;
            if (chem) {
                Real d;
                chem->eval(q[j], &d);
                grad[j] -= chi * omega[j] * d;
            }
        }
    }

    void project(Array& q) const {
        const int K = static_cast<int>(q.size()) - 1;
        Array r(K + 1);
        for (int j = 0; j <= K; ++j) r[j] = q[j] - j * delta_floor;
        pav_nondecreasing(r);
        const Real hi = L - K * delta_floor;
        for (int j = 0; j <= K; ++j) q[j] = std::clamp(r[j], 0.0, hi) + j * delta_floor;
    }

    Array solve(Array q, int max_iters) const {
        project(q);
        Real obj = objective(q);
        Array grad, grad_new, q_new;
        gradient(q, grad);
        Real step = tau / std::max(omega.maxCoeff(), 1e-300);
        int stagnant = 0;
        for (int it = 0; it < max_iters && stagnant < 3; ++it) {
            Real s = step;
            bool accepted = false;
            for (int bt = 0; bt < 60; ++bt) {
                q_new = q - s * grad;
                project(q_new);
                const Real lin = (grad * (q_new - q)).sum();
                const Real obj_new = objective(q_new);
                if (obj_new <= obj + 1e-4 * lin + 1e-15 * (1.0 + std::abs(obj))) {
                    gradient(q_new, grad_new);
                    const Array sv = q_new - q;
                    const Array yv = grad_new - grad;
                    const Real sy = (sv * yv).sum();
                    step = sy > 0.0 ? std::clamp((sv * sv).sum() / sy, 1e-14, 1e14) : 2.0 * s;
                    if (std::abs(obj - obj_new) <= 1e-15 * (1.0 + std::abs(obj)))
                        ++stagnant;
                    else
                        stagnant = 0;
                    q.swap(q_new);
                    grad.swap(grad_new);
                    obj = obj_new;
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if (!accepted) break;
        }
        return q;
    }
};

// ---------------------------------------------------------------------------
// inner solver, entropic scaling (any dim)

// in-place log-sum-exp over rows/columns of (M + shifts); B is scratch
void lse_rows_into(const Eigen::ArrayXXd& M, const Eigen::ArrayXd& col_shift,
                   Eigen::ArrayXXd& B, Eigen::ArrayXd& out) {
    B = M.rowwise() + col_shift.transpose();
    Eigen::ArrayXd mx = B.rowwise().maxCoeff();
    B.colwise() -= mx;
    B = B.exp();
    out = mx + B.rowwise().sum().log();
}

void lse_cols_into(const Eigen::ArrayXXd& M, const Eigen::ArrayXd& row_shift,
                   Eigen::ArrayXXd& B, Eigen::ArrayXd& out) {
    B = M.colwise() + row_shift;
    Eigen::ArrayXd mx = B.colwise().maxCoeff();
    B.rowwise() -= mx.transpose();
    B = B.exp();
    out = mx + B.colwise().sum().log().transpose();
}

struct EntropicInner {
    const GridSpec* grid;
    Real tau, chi, cap_mass;  // cap on a per-cell column mass, M_bar * cell_measure
    const EntropySpec* U;
    std::vector<int> rows;  // support of the data
    Eigen::ArrayXd la;      // log row masses
    Eigen::ArrayXXd C;      // squared distances rows x all cells
    Real total_mass;

    void build(const DensityField& g) {
        grid = &g.grid;
        const Real meas = g.grid.cell_measure();
        rows.clear();
        for (Eigen::Index i = 0; i < g.values.size(); ++i)
            if (g.values[i] > 0.0) rows.push_back(static_cast<int>(i));
        const int na = static_cast<int>(rows.size());
        const Eigen::Index nb = g.grid.size();
        la.resize(na);
        total_mass = 0.0;
        for (int i = 0; i < na; ++i) {
            la[i] = std::log(g.values[rows[i]] * meas);
            total_mass += g.values[rows[i]] * meas;
        }
        auto cx = [&](int flat) { return g.grid.center(0, flat % g.grid.cells[0]); };
        auto cy = [&](int flat) { return g.grid.center(1, flat / g.grid.cells[0]); };
        C.resize(na, nb);
        for (Eigen::Index j = 0; j < nb; ++j)
            for (int i = 0; i < na; ++i) {
                Real d = cx(rows[i]) - cx(static_cast<int>(j));
                Real c = d * d;
                if (g.grid.dim == 2) {
                    d = cy(rows[i]) - cy(static_cast<int>(j));
                    c += d * d;
                }
                C(i, j) = c;
            }
    }

    // eps ln(m) - eps lcol + 2 tau (U'(m/h) - chi c) = 0 on (0, cap_mass]
    Real prox_mass(Real eps, Real lcol, Real chem_c, Real meas) const {
        const Real tau2 = 2.0 * tau;
        auto psi = [&](Real m) {
            return eps * (std::log(m) - lcol) + tau2 * (U->u1(m / meas) - chi * chem_c);
        };
        Real hi = cap_mass;
        if (!std::isfinite(hi)) {
            hi = std::max(meas, total_mass);
            while (psi(hi) < 0.0) hi *= 2.0;
        } else if (psi(hi) <= 0.0) {
            return hi;  // cap active
        }
        Real lo = hi;
        while (psi(lo) > 0.0) lo *= 0.5;
        Real m = std::sqrt(lo * hi);
        for (int it = 0; it < 100; ++it) {
            const Real val = psi(m);
            if (std::abs(val) <= 1e-14 * (eps + tau2)) break;
            (val > 0.0 ? hi : lo) = m;
            const Real dpsi = eps / m + tau2 * U->u2(m / meas) / meas;
            Real m_new = m - val / dpsi;
            if (!(m_new > lo && m_new < hi)) m_new = std::sqrt(lo * hi);
            if (m_new == m) break;
            m = m_new;
        }
        return m;
    }

    // Returns cell masses; f/g warm-started in place. A cold start prepends
    // a coarse-to-fine burn-in from the cost scale down to the first
    // scheduled stage: scaling iterations stall when started from zero
    // potentials at epsilon far below the cost oscillation.
    Eigen::ArrayXd solve(const std::vector<Real>& eps_stages_in, const Array& chem,
                         Eigen::ArrayXd& f, Eigen::ArrayXd& g, int max_iters_per_stage,
                         Real marginal_tol) const {
        const Real meas = grid->cell_measure();
        const Eigen::Index nb = C.cols();
        const bool cold = f.size() != C.rows() || g.size() != nb;
        if (cold) {
            f = Eigen::ArrayXd::Zero(C.rows());
            g = Eigen::ArrayXd::Zero(nb);
        }
        std::vector<Real> eps_stages = eps_stages_in;
        if (cold) {
            std::vector<Real> burnin;
            Real e = eps_stages_in.front() * 4.0;
            const Real top = 0.1 * C.maxCoeff();
            while (e < top) {
                burnin.push_back(e);
                e *= 4.0;
            }
            if (!burnin.empty())
                eps_stages.insert(eps_stages.begin(), burnin.rbegin(), burnin.rend());
        }
        Eigen::ArrayXd m_prox = Eigen::ArrayXd::Zero(nb), col = Eigen::ArrayXd::Zero(nb);
        Eigen::ArrayXd lcol(nb), lrow(C.rows());
        Eigen::ArrayXXd scratch(C.rows(), nb), Me(C.rows(), nb);
        for (size_t stage = 0; stage < eps_stages.size(); ++stage) {
            const Real e = eps_stages[stage];
            const bool last = stage + 1 == eps_stages.size();
            const Real tol = (last ? marginal_tol : 1e-5) * total_mass;
            Me = -C / e;
            int it = 0;
            for (bool stepped = false;; stepped = true) {
                lse_cols_into(Me, f / e, scratch, lcol);
                if (stepped) {
                    col = (g / e + lcol).exp();
                    if ((col - m_prox).abs().sum() <= tol) break;
                }
                if (it++ >= max_iters_per_stage)
                    throw SolverError("w2_step: entropic inner solve did not converge (eps " +
                                      std::to_string(e) + ")");
                for (Eigen::Index j = 0; j < nb; ++j) {
                    m_prox[j] = prox_mass(e, lcol[j], chem[j], meas);
                    g[j] = e * (std::log(m_prox[j]) - lcol[j]);
                }
                lse_rows_into(Me, g / e, scratch, lrow);
                f = e * (la - lrow);
            }
        }
        return col;
    }
};

}  // namespace

std::vector<Real> W2StepConfig::effective_eps_schedule(Real cell_width) const {
    if (!eps_schedule.empty()) return eps_schedule;
    // Geometric ladder ending at a blur of two cells. Scaling iterations need
    // on the order of (dual oscillation)/eps sweeps to converge, so the
    // terminal eps sets the runtime; the induced density bias is second
    // order in the blur because the per-step displacement is subcell.
    const Real h2 = cell_width * cell_width;
    std::vector<Real> out;
    for (int s = 0; s < 5; ++s) out.push_back(64.0 * h2 * std::pow(0.5, s));
    return out;
}

Real energy_e1(const DensityField& rho, const ModelParams& model) {
    const Real meas = rho.grid.cell_measure();
    Real internal = 0.0;
    for (Eigen::Index i = 0; i < rho.values.size(); ++i)
        internal += model.entropy.u(rho.values[i]);
    internal *= meas;
    if (model.chi == 0.0) return internal;
    return internal - 0.5 * model.chi * elliptic::energy_pairing(rho, model.elliptic_cfg);
}

Real energy_e2(const DensityField& rho, const ReactionSpec& F) {
    Real e = 0.0;
    for (Eigen::Index i = 0; i < rho.values.size(); ++i) e += F.f(rho.values[i]);
    return e * rho.grid.cell_measure();
}

DensityField w2_step(const DensityField& g, const ModelParams& model, const W2StepConfig& cfg,
                     W2StepDiagnostics* diag, W2StepWorkspace* ws) {
    const Real m = mass(g);
    if (m <= 0.0) throw SolverError("w2_step: data has zero mass");
    const Real cap = cfg.density_cap(model.chi);
    if (m > cap * g.grid.measure() * (1.0 + 1e-12))
        throw CapInfeasibleError("w2_step: mass(g) exceeds cap * |Omega|");
    if (linf(g) > cap * (1.0 + 1e-10))
        throw CapInfeasibleError("w2_step: data violates the density cap");

    const bool quantile = cfg.backend == W2Backend::quantile_1d;
    if (quantile && g.grid.dim != 1)
        throw SolverError("w2_step: quantile backend requires a 1D grid");

    auto true_objective = [&](const DensityField& mu, Real* w2sq_out) {
        Real w2sq;
        if (g.grid.dim == 1) {
            w2sq = metrics::w2_1d(g, mu).w2_sq;
        } else {
            const Real h2 = g.grid.cell_width(0) * g.grid.cell_width(0);
            w2sq = metrics::w2_entropic(g, mu, 1e-2 * h2).cost;
        }
        if (w2sq_out) *w2sq_out = w2sq;
        return energy_e1(mu, model) + w2sq / (2.0 * cfg.tau);
    };

    const Real e1_g = energy_e1(g, model);
    DensityField best = g;
    Real best_obj = e1_g;
    Real best_w2sq = 0.0;
    bool best_is_input = true;

    DensityField rho_cur = g;
    int outers = 0;
    Real gap = 0.0;

    // quantile state
    const int K = cfg.quantile_count > 0 ? cfg.quantile_count : 4 * g.grid.cells[0];
    QuantileInner qi;
    Array q_warm;
    EntropicInner ei;
    Eigen::ArrayXd f_pot, g_pot;
    if (quantile) {
        qi.grid = &g.grid;
        qi.tau = cfg.tau;
        qi.chi = model.chi;
        qi.w = m / K;
        qi.L = g.grid.lengths[0];
        qi.delta_floor = std::max(qi.w / cap, 1e-13 * qi.L / K);
        qi.U = &model.entropy;
        qi.qg = quantile_faces(g, K);
        qi.omega.resize(K + 1);
        for (int j = 0; j <= K; ++j) qi.omega[j] = (j == 0 || j == K) ? 0.5 * qi.w : qi.w;
        q_warm = ws && ws->has_faces && ws->faces.size() == K + 1 ? ws->faces : qi.qg;
    } else {
        ei.build(g);
        ei.tau = cfg.tau;
        ei.chi = model.chi;
        ei.cap_mass = cap * g.grid.cell_measure();
        ei.U = &model.entropy;
        if (ws && ws->has_potentials && ws->f.size() == ei.C.rows() &&
            ws->g.size() == ei.C.cols()) {
            f_pot = ws->f;
            g_pot = ws->g;
            // linear extrapolation along the step index shrinks the warm-start
            // gap by an order of tau
            if (ws->has_history && ws->f_prev.size() == f_pot.size() &&
                ws->g_prev.size() == g_pot.size()) {
                f_pot += ws->f - ws->f_prev;
                g_pot += ws->g - ws->g_prev;
            }
        }
    }

    const int max_outer = std::max(1, cfg.outer_fixed_point_iters);
    for (int outer = 0; outer < max_outer; ++outer) {
        ++outers;
        HermiteInterp chem_interp;
        Array chem_values;
        const bool with_chem = model.chi > 0.0;
        if (with_chem) {
            elliptic::Solution sol = elliptic::solve_full(rho_cur, model.elliptic_cfg);
            chem_values = sol.c.values;
            if (quantile) {
                chem_interp.grid = &g.grid;
                chem_interp.v = sol.c.values;
                chem_interp.d = sol.grad_c[0].values;
            }
        }

        DensityField candidate = g;
        if (quantile) {
            qi.chem = with_chem ? &chem_interp : nullptr;
            q_warm = qi.solve(q_warm, cfg.max_inner_iters);
            candidate = density_from_faces(g.grid, q_warm, m);
        } else {
            Array chem = with_chem ? chem_values : Array::Zero(g.grid.size());
            Eigen::ArrayXd col =
                ei.solve(cfg.effective_eps_schedule(g.grid.cell_width(0)), chem, f_pot, g_pot,
                         cfg.max_scaling_iters,
                         std::clamp(cfg.inner_tol, 1e-9, 1e-7));
            Array vals = col / g.grid.cell_measure();
            vals = vals.max(0.0);
            candidate = DensityField(g.grid, vals);
        }

        Real w2sq = 0.0;
        const Real obj = true_objective(candidate, &w2sq);
        if (obj < best_obj) {
            best = candidate;
            best_obj = obj;
            best_w2sq = w2sq;
            best_is_input = false;
        }
        gap = (candidate.values - rho_cur.values).abs().sum() * g.grid.cell_measure();
        rho_cur = candidate;
        if (!with_chem || gap <= cfg.inner_tol) break;
    }

    if (ws) {
        if (quantile) {
            ws->faces = q_warm;
            ws->has_faces = true;
        } else {
            if (ws->has_potentials && ws->f.size() == f_pot.size()) {
                ws->f_prev = ws->f;
                ws->g_prev = ws->g;
                ws->has_history = true;
            }
            ws->f = f_pot;
            ws->g = g_pot;
            ws->has_potentials = true;
        }
    }

    // postconditions
    const Real mass_best = mass(best);
    if (std::abs(mass_best - m) > 1e-8 * m)
        throw SolverError("w2_step: mass not preserved within tolerance");
    if (linf(best) > cap * (1.0 + 1e-10))
        throw SolverError("w2_step: density cap violated");
    if (best_obj > e1_g + 1e-8 * (1.0 + std::abs(e1_g)))
        throw SolverError("w2_step: objective above the admissible competitor");

    if (diag) {
        diag->w2_sq = best_w2sq;
        diag->objective_initial = e1_g;
        diag->objective_final = best_obj;
        diag->outer_iters_used = outers;
        diag->outer_gap_l1 = gap;
        diag->returned_input = best_is_input;
    }
    return best;
}

ELResidualReport w2_step_el_residual(const DensityField& rho, const DensityField& g,
                                     const ModelParams& model, Real tau) {
    if (rho.grid.dim != 1)
        throw std::invalid_argument("w2_step_el_residual: requires the 1D quantile setting");
    metrics::W2Result tr = metrics::w2_1d(rho, g);
    Array c = Array::Zero(rho.grid.size());
    if (model.chi > 0.0) c = elliptic::solve(rho, model.elliptic_cfg).values;

    const Real cap = model.chi > 0.0 ? 1.0 / (tau * model.chi) : kInf;
    const Real meas = rho.grid.cell_measure();
    const Real support_floor = 1e-12 * std::max(1.0, linf(rho));
    const int n = rho.grid.cells[0];

    Array h_field(n);
    for (int i = 0; i < n; ++i)
        h_field[i] = model.entropy.u1(std::max(rho.values[i], 1e-300)) -
                     model.chi * c[i] + tr.potential.values[i] / (2.0 * tau);

    std::vector<std::pair<Real, Real>> vw;
    int cap_active = 0;
    for (int i = 0; i < n; ++i) {
        if (rho.values[i] >= 0.99 * cap) ++cap_active;
        if (rho.values[i] > support_floor && rho.values[i] < 0.99 * cap)
            vw.emplace_back(h_field[i], rho.values[i] * meas);
    }
    ELResidualReport rep;
    rep.l_estimate = weighted_median(vw);
    rep.cap_active_fraction = static_cast<Real>(cap_active) / n;
    for (int i = 0; i < n; ++i) {
        if (rho.values[i] <= support_floor) continue;
        if (rho.values[i] < 0.99 * cap)
            rep.max_residual = std::max(rep.max_residual, std::abs(h_field[i] - rep.l_estimate));
        if (std::isfinite(cap)) {
            const Real p = std::max(rep.l_estimate - h_field[i], 0.0);
            rep.complementarity_defect =
                std::max(rep.complementarity_defect, p * (cap - rho.values[i]) / cap);
        }
    }
    return rep;
}

DensityField fr_step(const DensityField& rho, const ReactionSpec& F, Real tau) {
    Array out(rho.values.size());
    for (Eigen::Index i = 0; i < out.size(); ++i)
        out[i] = J_tau_inverse(rho.values[i], tau, F);
    return DensityField(rho.grid, std::move(out));
}

FrStepChecks fr_step_estimates(const DensityField& rho, const DensityField& rho_hat,
                               const ReactionSpec& F, Real tau, Real M) {
    if (F.alpha * tau >= 1.0)
        throw std::invalid_argument("fr_step_estimates: requires alpha * tau < 1");
    FrStepChecks out;
    out.linf_before = linf(rho);
    out.linf_after = linf(rho_hat);
    const Real eta_M = eta(M, F);
    out.contraction_branch = out.linf_after > eta_M;
    out.linf_bound = out.contraction_branch ? out.linf_before / (1.0 + tau * M) : eta_M;
    out.linf_margin = out.linf_bound + 1e-10 - out.linf_after;

    out.mass_before = mass(rho);
    out.mass_after = mass(rho_hat);
    const XiReport xr = xi(out.mass_before, F, rho.grid.measure());
    out.mass_bound = (out.mass_before + tau * xr.B_eps) / (1.0 + tau * xr.A_eps);
    out.mass_margin = out.mass_bound + 1e-10 - out.mass_after;
    return out;
}

}  // namespace jko
}  // namespace ksjko
