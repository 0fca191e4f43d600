#include "ksjko/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace ksjko {
namespace metrics {

namespace {

// Cumulative masses at cell faces plus exact inversion of the piecewise
// linear CDF. Plateaus (vacuum cells) invert to their left edge.
struct Cdf {
    const GridSpec* grid;
    const Array* values;
    std::vector<Real> faces;   // z_0 .. z_N
    std::vector<Real> cum;     // W_0 .. W_N
    Real total;

    Cdf(const DensityField& rho) : grid(&rho.grid), values(&rho.values) {
        const int n = rho.grid.cells[0];
        const Real h = rho.grid.cell_width(0);
        faces.resize(n + 1);
        cum.resize(n + 1);
        cum[0] = 0.0;
        for (int i = 0; i < n; ++i) {
            faces[i] = i * h;
            cum[i + 1] = cum[i] + rho.values[i] * h;
        }
        faces[n] = rho.grid.lengths[0];
        total = cum[n];
    }

    // Largest cell i with W_i <= u.
    int segment(Real u) const {
        auto it = std::upper_bound(cum.begin(), cum.end(), u);
        int i = static_cast<int>(it - cum.begin()) - 1;
        return std::clamp(i, 0, static_cast<int>(cum.size()) - 2);
    }

    Real quantile(Real u) const {
        u = std::clamp(u, 0.0, total);
        const int i = segment(u);
        const Real v = (*values)[i];
        if (v <= 0.0) return faces[i];
        const Real h = grid->cell_width(0);
        return faces[i] + std::min((u - cum[i]) / v, h);
    }

    // Quantile restricted to the open mass interval (ua, ub): the affine
    // branch valid strictly inside, evaluated at u. Used at piece endpoints
    // where the global inverse may sit on a plateau edge.
    Real quantile_within(Real ua, Real ub, Real u) const {
        const Real mid = 0.5 * (ua + ub);
        const int i = segment(std::clamp(mid, 0.0, total));
        const Real v = (*values)[i];
        if (v <= 0.0) return faces[i];
        return faces[i] + (u - cum[i]) / v;
    }
};

void check_pair(const DensityField& a, const DensityField& b) {
    if (!(a.grid == b.grid))
        throw std::invalid_argument("metrics: fields must share one grid");
}

}  // namespace

Real W2Result::integral_T(Real x) const {
    const auto& xs = piece_x;
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    int k = static_cast<int>(it - xs.begin()) - 1;
    k = std::clamp(k, 0, static_cast<int>(xs.size()) - 2);
    const Real dx = x - xs[k];
    return piece_I[k] + piece_T[k] * dx + 0.5 * piece_slope[k] * dx * dx;
}

Real W2Result::phi_at(Real x) const { return x * x - 2.0 * integral_T(x); }

Real W2Result::map_at(Real x) const {
    const auto& xs = piece_x;
    auto it = std::upper_bound(xs.begin(), xs.end(), x);
    int k = static_cast<int>(it - xs.begin()) - 1;
    k = std::clamp(k, 0, static_cast<int>(xs.size()) - 2);
    return piece_T[k] + piece_slope[k] * (x - xs[k]);
}

Real W2Result::ctransform_at(Real y) const {
    // (x-y)^2 - phi(x) is quadratic on each piece with nonnegative leading
    // coefficient (T monotone), so the piece minimum is explicit.
    Real best = std::numeric_limits<Real>::infinity();
    const int np = static_cast<int>(piece_x.size()) - 1;
    for (int k = 0; k < np; ++k) {
        const Real x0 = piece_x[k], len = piece_x[k + 1] - x0;
        if (len <= 0.0) continue;
        const Real a = piece_slope[k];
        const Real b = 2.0 * (piece_T[k] - y);
        const Real q0 = (x0 - y) * (x0 - y) - (x0 * x0 - 2.0 * piece_I[k]);
        auto eval = [&](Real xi) { return q0 + b * xi + a * xi * xi; };
        Real cand = std::min(eval(0.0), eval(len));
        if (a > 0.0) {
            const Real xi = -b / (2.0 * a);
            if (xi > 0.0 && xi < len) cand = std::min(cand, eval(xi));
        }
        best = std::min(best, cand);
    }
    return best;
}

W2Result w2_1d(const DensityField& rho0, const DensityField& rho1, int quantile_count) {
    check_pair(rho0, rho1);
    if (rho0.grid.dim != 1) throw std::invalid_argument("w2_1d: 1D fields only");
    const Real m0 = mass(rho0), m1 = mass(rho1);
    if (m0 <= 0.0 || m1 <= 0.0) throw std::invalid_argument("w2_1d: zero-mass field");
    if (std::abs(m0 - m1) > 1e-10 * m0)
        throw std::invalid_argument("w2_1d: mass mismatch beyond tolerance");

    // Equalize masses exactly so the monotone coupling is well defined.
    DensityField rho1_eq = rho1;
    rho1_eq.values *= m0 / m1;

    const Cdf c0(rho0), c1(rho1_eq);
    const Real m = c0.total;
    const int n = rho0.grid.cells[0];
    const int K = quantile_count > 0 ? quantile_count : 4 * n;

    W2Result res;

    // Breakpoints: source faces plus points where the source CDF crosses a
    // target face level. Between consecutive breakpoints T is affine.
    res.piece_x.reserve(2 * n + 2);
    res.piece_T.reserve(2 * n + 2);
    res.piece_slope.reserve(2 * n + 2);
    res.piece_I.reserve(2 * n + 2);

    struct Bp {
        Real x;
        Real u;  // exact source mass at x
    };
    std::vector<Bp> bps;
    bps.push_back({0.0, 0.0});
    {
        int j = 0;  // target face pointer
        for (int i = 0; i < n; ++i) {
            const Real v = rho0.values[i];
            const Real ua = c0.cum[i], ub = c0.cum[i + 1];
            if (v > 0.0) {
                while (j + 1 < static_cast<int>(c1.cum.size()) && c1.cum[j + 1] <= ua) ++j;
                for (int jj = j; jj + 1 < static_cast<int>(c1.cum.size()); ++jj) {
                    const Real level = c1.cum[jj + 1];
                    if (level >= ub) break;
                    if (level > ua)
                        bps.push_back({c0.faces[i] + (level - ua) / v, level});
                }
            }
            bps.push_back({c0.faces[i + 1], ub});
        }
    }

    Real I = 0.0;
    for (size_t k = 0; k + 1 < bps.size(); ++k) {
        const Real xa = bps[k].x, xb = bps[k + 1].x;
        const Real ua = bps[k].u, ub = bps[k + 1].u;
        if (xb <= xa) continue;
        const Real Ta = c1.quantile_within(ua, ub, ua);
        const Real Tb = c1.quantile_within(ua, ub, ub);
        res.piece_x.push_back(xa);
        res.piece_T.push_back(Ta);
        res.piece_slope.push_back(ub > ua ? (Tb - Ta) / (xb - xa) : 0.0);
        res.piece_I.push_back(I);
        I += 0.5 * (Ta + Tb) * (xb - xa);
    }
    res.piece_x.push_back(rho0.grid.lengths[0]);
    res.piece_T.push_back(res.piece_T.empty() ? 0.0 : res.piece_T.back());
    res.piece_slope.push_back(0.0);
    res.piece_I.push_back(I);

    // Quantile-node transport cost and the plan record.
    res.plan.source_quantiles.resize(K);
    res.plan.target_quantiles.resize(K);
    Real acc = 0.0;
    for (int k = 0; k < K; ++k) {
        const Real u = (k + 0.5) * m / K;
        const Real q0 = c0.quantile(u), q1 = c1.quantile(u);
        res.plan.source_quantiles[k] = q0;
        res.plan.target_quantiles[k] = q1;
        acc += (q0 - q1) * (q0 - q1);
    }
    res.w2_sq = acc * m / K;
    res.w2 = std::sqrt(std::max(res.w2_sq, 0.0));

    res.plan.map_values.resize(n);
    for (int i = 0; i < n; ++i) res.plan.map_values[i] = res.map_at(rho0.grid.center(0, i));

    Array phi(n), phic(n);
    for (int i = 0; i < n; ++i) {
        const Real x = rho0.grid.center(0, i);
        phi[i] = res.phi_at(x);
        phic[i] = res.ctransform_at(x);
    }
    res.potential = ScalarField(rho0.grid, std::move(phi));
    res.potential_c = ScalarField(rho0.grid, std::move(phic));

    // Duality value in the same mass coordinates as the cost quadrature.
    Real dual = 0.0;
    for (int k = 0; k < K; ++k)
        dual += res.phi_at(res.plan.source_quantiles[k]) +
                res.ctransform_at(res.plan.target_quantiles[k]);
    res.dual_value = dual * m / K;
    return res;
}

Real w2_distance(const DensityField& rho0, const DensityField& rho1) {
    return w2_1d(rho0, rho1).w2;
}

namespace {

// Row-wise log-sum-exp of (M + shift_row 1^T + 1 shift_col^T).
Eigen::ArrayXd lse_rows(const Eigen::ArrayXXd& M, const Eigen::ArrayXd& col_shift) {
    Eigen::ArrayXXd B = M.rowwise() + col_shift.transpose();
    Eigen::ArrayXd mx = B.rowwise().maxCoeff();
    return mx + ((B.colwise() - mx).exp().rowwise().sum()).log();
}

Eigen::ArrayXd lse_cols(const Eigen::ArrayXXd& M, const Eigen::ArrayXd& row_shift) {
    Eigen::ArrayXXd B = M.colwise() + row_shift;
    Eigen::ArrayXd mx = B.colwise().maxCoeff();
    return mx + ((B.rowwise() - mx.transpose()).exp().colwise().sum()).log().transpose();
}

}  // namespace

SinkhornResult w2_entropic(const DensityField& rho0, const DensityField& rho1, Real eps,
                           const SinkhornOptions& opts) {
    check_pair(rho0, rho1);
    if (eps <= 0.0) throw std::invalid_argument("w2_entropic: eps must be > 0");
    const Real m0 = mass(rho0), m1 = mass(rho1);
    if (m0 <= 0.0 || m1 <= 0.0) throw std::invalid_argument("w2_entropic: zero-mass field");
    if (std::abs(m0 - m1) > 1e-10 * m0)
        throw std::invalid_argument("w2_entropic: mass mismatch beyond tolerance");

    // The entropic cost is symmetric in its arguments; canonicalize the
    // evaluation order so the symmetry holds bit-exactly.
    const Real* p0 = rho0.values.data();
    const Real* p1 = rho1.values.data();
    const bool swap_args =
        std::lexicographical_compare(p1, p1 + rho1.values.size(), p0, p0 + rho0.values.size());
    const DensityField& A = swap_args ? rho1 : rho0;
    const DensityField& B = swap_args ? rho0 : rho1;

    const GridSpec& g = A.grid;
    const Real meas = g.cell_measure();

    std::vector<int> ia, ib;  // support indices
    for (Eigen::Index i = 0; i < A.values.size(); ++i)
        if (A.values[i] > 0.0) ia.push_back(static_cast<int>(i));
    for (Eigen::Index i = 0; i < B.values.size(); ++i)
        if (B.values[i] > 0.0) ib.push_back(static_cast<int>(i));
    const int na = static_cast<int>(ia.size()), nb = static_cast<int>(ib.size());

    Eigen::ArrayXd la(na), lb(nb);
    Real ma = 0.0;
    for (int i = 0; i < na; ++i) {
        la[i] = std::log(A.values[ia[i]] * meas);
        ma += A.values[ia[i]] * meas;
    }
    const Real scale = m0 / (B.values.sum() * meas);
    for (int j = 0; j < nb; ++j) lb[j] = std::log(B.values[ib[j]] * meas * scale);

    auto pos = [&](int flat, int axis) {
        const int ix = flat % g.cells[0];
        const int iy = flat / g.cells[0];
        return axis == 0 ? g.center(0, ix) : g.center(1, iy);
    };
    Eigen::ArrayXXd C(na, nb);
    for (int j = 0; j < nb; ++j)
        for (int i = 0; i < na; ++i) {
            Real d = pos(ia[i], 0) - pos(ib[j], 0);
            Real c = d * d;
            if (g.dim == 2) {
                d = pos(ia[i], 1) - pos(ib[j], 1);
                c += d * d;
            }
            C(i, j) = c;
        }

    // Annealing ladder down to the target eps; potentials carry over.
    std::vector<Real> ladder{eps};
    if (opts.anneal) {
        Real e = eps;
        const Real top = 0.1 * C.maxCoeff() + eps;
        while (e < top) {
            e *= 4.0;
            ladder.push_back(e);
        }
        std::reverse(ladder.begin(), ladder.end());
    }

    // Scaling iterations on gamma_ij = exp((f_i + g_j - C_ij)/eps): the
    // f-update makes the row marginals equal to a exactly, the column
    // violation drives the stop rule.
    Eigen::ArrayXd f = Eigen::ArrayXd::Zero(na), gpot = Eigen::ArrayXd::Zero(nb);
    const Eigen::ArrayXd b = lb.exp();
    int total_iters = 0;
    Real violation = std::numeric_limits<Real>::infinity();
    for (Real e : ladder) {
        const Eigen::ArrayXXd Me = -C / e;
        const bool last = (e == eps);
        const Real tol = (last ? opts.marginal_tol : 1e-4) * ma;
        for (bool stepped = false;; stepped = true) {
            Eigen::ArrayXd Lcol = lse_cols(Me, f / e);
            if (stepped) {  // rows are exact right after an f-update
                violation = ((gpot / e + Lcol).exp() - b).abs().sum();
                if (violation <= tol) break;
            }
            if (total_iters >= opts.max_iters)
                throw std::runtime_error(
                    "w2_entropic: no convergence after max_iters (violation " +
                    std::to_string(violation) + ")");
            gpot = e * (lb - Lcol);
            f = e * (la - lse_rows(Me, gpot / e));
            ++total_iters;
        }
    }

    // Plain transport cost of the converged plan.
    Eigen::ArrayXXd logplan =
        ((-C / eps).colwise() + f / eps).rowwise() + (gpot / eps).transpose();
    SinkhornResult out;
    out.cost = (logplan.exp() * C).sum();
    out.iterations = total_iters;
    out.marginal_violation = violation;
    out.eps = eps;
    return out;
}

Real fr_distance_sq(const DensityField& rho0, const DensityField& rho1) {
    check_pair(rho0, rho1);
    return 4.0 * (rho0.values.sqrt() - rho1.values.sqrt()).square().sum() *
           rho0.grid.cell_measure();
}

Real fr_distance(const DensityField& rho0, const DensityField& rho1) {
    return std::sqrt(fr_distance_sq(rho0, rho1));
}

Real wfr_upper_bound(const DensityField& rho0, const DensityField& rho1) {
    check_pair(rho0, rho1);
    const Real m0 = mass(rho0), m1 = mass(rho1);
    Real best = fr_distance(rho0, rho1);
    if (m0 > 0.0 && m1 > 0.0 && rho0.grid.dim == 1) {
        {
            DensityField sigma = rho1;  // matched to rho0's mass
            sigma.values *= m0 / m1;
            const Real w2 = w2_distance(rho0, sigma);
            const Real fr = fr_distance(sigma, rho1);
            best = std::min(best, std::sqrt(2.0 * (w2 * w2 + fr * fr)));
        }
        {
            DensityField sigma = rho0;  // matched to rho1's mass
            sigma.values *= m1 / m0;
            const Real w2 = w2_distance(rho1, sigma);
            const Real fr = fr_distance(sigma, rho0);
            best = std::min(best, std::sqrt(2.0 * (w2 * w2 + fr * fr)));
        }
        if (std::abs(m0 - m1) <= 1e-10 * std::max(m0, m1))
            best = std::min(best, w2_distance(rho0, rho1));
    }
    return best;
}

}  // namespace metrics
}  // namespace ksjko
