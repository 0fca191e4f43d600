#include "ksjko/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ksjko {

namespace {

Real xlogx(Real s) { return s > 0.0 ? s * std::log(s) : 0.0; }

// Golden-section minimum of a unimodal f on [a, b].
template <class F>
Real golden_min(F f, Real a, Real b) {
    const Real gr = 0.5 * (std::sqrt(5.0) - 1.0);
    Real c = b - gr * (b - a), d = a + gr * (b - a);
    Real fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > 1e-14 * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    return std::min(fc, fd);
}

}  // namespace

Real EntropySpec::u(Real s) const {
    if (s < 0.0) throw std::invalid_argument("EntropySpec::u: negative argument");
    Real base = kind == Kind::boltzmann ? xlogx(s) : std::pow(s, m) / (m - 1.0);
    return base + delta * xlogx(s);
}

Real EntropySpec::u1(Real s) const {
    Real base = kind == Kind::boltzmann ? std::log(s) + 1.0
                                        : m * std::pow(s, m - 1.0) / (m - 1.0);
    return base + delta * (std::log(s) + 1.0);
}

Real EntropySpec::u2(Real s) const {
    Real base = kind == Kind::boltzmann ? 1.0 / s : m * std::pow(s, m - 2.0);
    return base + delta / s;
}

Real EntropySpec::psi(Real s) const {
    if (s <= 0.0) return 0.0;
    Real base = kind == Kind::boltzmann ? s : std::pow(s, m);
    return base + delta * s;
}

Real eta(Real M, const ReactionSpec& F) {
    if (M <= 0.0) throw std::invalid_argument("eta: M must be > 0");
    return std::pow((F.alpha + M) / F.beta, 1.0 / (F.r - 1.0));
}

ChiStarCase chi_star_case(Real rho0_linf, const ReactionSpec& F) {
    if (rho0_linf <= 0.0) throw std::invalid_argument("chi_star: rho0_linf must be > 0");
    if (F.r > 2.0) return ChiStarCase::r_above_2;
    if (F.r == 2.0) return ChiStarCase::r_equal_2;
    const Real boundary = std::pow(F.alpha / (F.beta * (2.0 - F.r)), 1.0 / (F.r - 1.0));
    return rho0_linf > boundary ? ChiStarCase::subquadratic_large_rho0
                                : ChiStarCase::subquadratic_small_rho0;
}

Real chi_star(Real rho0_linf, const ReactionSpec& F) {
    switch (chi_star_case(rho0_linf, F)) {
        case ChiStarCase::r_above_2:
            return kInf;
        case ChiStarCase::r_equal_2:
            return F.beta;
        case ChiStarCase::subquadratic_large_rho0:
            return (F.beta * std::pow(rho0_linf, F.r - 1.0) - F.alpha) / rho0_linf;
        case ChiStarCase::subquadratic_small_rho0:
            return std::pow(F.alpha, (2.0 - F.r) / (1.0 - F.r)) *
                   std::pow(F.beta, 1.0 / (F.r - 1.0)) *
                   std::pow(2.0 - F.r, (2.0 - F.r) / (F.r - 1.0)) * (F.r - 1.0);
    }
    return 0.0;
}

std::string to_string(ChiStarCase c) {
    switch (c) {
        case ChiStarCase::r_above_2: return "r>2";
        case ChiStarCase::r_equal_2: return "r=2";
        case ChiStarCase::subquadratic_large_rho0: return "1<r<2, large rho0";
        case ChiStarCase::subquadratic_small_rho0: return "1<r<2, small rho0";
    }
    return "?";
}

Real theta(Real M, Real tau, Real q, Real lambda, Real chi) {
    if (tau < 0.0) throw std::invalid_argument("theta: tau must be >= 0");
    return (1.0 + tau * M) * (1.0 / q - lambda * chi * tau);
}

Real select_Mstar(Real rho0_linf, const ReactionSpec& F, Real lambda, Real chi) {
    const Real cs = chi_star(rho0_linf, F);
    if (!(lambda * chi < cs))
        throw std::invalid_argument("select_Mstar: lambda*chi must be below chi_star");

    if (F.r < 2.0) {
        const Real boundary =
            std::pow(F.alpha / (F.beta * (2.0 - F.r)), 1.0 / (F.r - 1.0));
        if (rho0_linf > boundary)
            return F.beta * std::pow(rho0_linf, F.r - 1.0) - F.alpha;
        return F.alpha * (F.r - 1.0) / (2.0 - F.r);
    }

    // r >= 2: min(f, g) is increasing, so its grid sup sits at the top of the
    // range; a maximizer there makes eta_M (the L-inf absorption level) and
    // the admissible step sizes degenerate. Pick the smallest M whose margin
    // over lambda*chi is at least half of what the grid sup achieves.
    const Real M_max = 1e6 * std::max({1.0, F.alpha, F.beta});
    const int n = 20000;
    const Real lo = std::log(1e-6), hi = std::log(M_max);
    auto fg = [&](Real M) {
        return std::min(M / eta(M, F), M / rho0_linf);
    };
    Real sup = 0.0;
    for (int i = 0; i < n; ++i) sup = std::max(sup, fg(std::exp(lo + (hi - lo) * i / (n - 1))));
    if (!(sup > lambda * chi))
        throw std::invalid_argument("select_Mstar: no admissible M on the search grid");
    const Real target = lambda * chi + 0.5 * (sup - lambda * chi);
    for (int i = 0; i < n; ++i) {
        const Real M = std::exp(lo + (hi - lo) * i / (n - 1));
        if (fg(M) >= target) return M;
    }
    return M_max;
}

XiReport xi(Real rho0_l1, const ReactionSpec& F, Real omega_measure) {
    if (omega_measure <= 0.0) throw std::invalid_argument("xi: omega_measure must be > 0");
    const Real rp = F.r / (F.r - 1.0);  // Hoelder conjugate
    const Real k0 = std::pow(omega_measure, 1.0 / rp);
    const Real base = F.beta * std::pow(k0, -F.r);

    XiReport rep;
    rep.xi = kInf;
    const int n = 2001;
    const Real llo = std::log(1e-12), lhi = std::log(1e12);
    Real best = kInf;
    for (int i = 0; i < n; ++i) {
        const Real eps = std::exp(llo + (lhi - llo) * i / (n - 1));
        const Real A = base / eps - F.alpha;
        if (A <= 0.0) continue;
        const Real C_eps = std::pow(F.r * eps, -1.0 / (F.r - 1.0)) / rp;
        const Real B = base * C_eps / eps;
        if (B / A < best) {
            best = B / A;
            rep.eps = eps;
            rep.A_eps = A;
            rep.B_eps = B;
        }
    }
    rep.xi = std::max(rho0_l1, best);
    return rep;
}

C0Report c0_and_delta(Real lambda, Real chi, int dim) {
    if (lambda <= 1.0) throw std::invalid_argument("c0_and_delta: lambda must be > 1");
    const Real cap = dim == 1 ? 1.0 : std::min(1.0 / (2.0 * (dim - 1)), 1.0);
    auto phi = [&](Real x) { return std::pow(1.0 + x, dim) - 1.0 - lambda * dim * x; };
    Real d;
    if (phi(cap) <= 0.0) {
        d = cap;
    } else {
        Real a = 0.0, b = cap;  // phi < 0 just above 0, > 0 at b
        for (int it = 0; it < 200; ++it) {
            const Real mid = 0.5 * (a + b);
            (phi(mid) <= 0.0 ? a : b) = mid;
        }
        d = a;
    }
    C0Report rep;
    rep.delta = d;
    rep.c0 = chi > 0.0 ? dim * d / (chi * std::pow(1.0 + d, dim)) : kInf;
    return rep;
}

Real J_tau(Real s, Real tau, const ReactionSpec& F) {
    if (s < 0.0) throw std::invalid_argument("J_tau: s must be >= 0");
    if (s == 0.0) return 0.0;
    const Real a = 1.0 + 0.5 * tau * F.f1(s);
    return s * a * a;
}

Real J_tau_inverse(Real rho_val, Real tau, const ReactionSpec& F) {
    if (tau <= 0.0) throw std::invalid_argument("J_tau_inverse: tau must be > 0");
    if (F.alpha > 0.0 && tau >= 1.0 / (2.0 * F.alpha))
        throw std::invalid_argument("J_tau_inverse: requires tau < 1/(2 alpha)");
    if (rho_val < 0.0) throw std::invalid_argument("J_tau_inverse: rho must be >= 0");
    if (rho_val == 0.0) return 0.0;

    // J(s) >= 9 s / 16 under tau < 1/(2 alpha), so [0, 2 rho] brackets.
    Real lo = 0.0, hi = 2.0 * rho_val;
    while (J_tau(hi, tau, F) < rho_val) hi *= 2.0;

    auto jp = [&](Real s) {
        const Real a = 1.0 + 0.5 * tau * F.f1(s);
        const Real sf2 = F.beta * (F.r - 1.0) * std::pow(s, F.r - 1.0);  // s F''(s)
        return a * (a + tau * sf2);
    };

    Real x = std::min(rho_val, hi);
    const Real tol = 1e-15 * std::max(rho_val, 1e-300);
    for (int it = 0; it < 200; ++it) {
        const Real res = J_tau(x, tau, F) - rho_val;
        if (std::abs(res) <= tol) break;
        (res > 0.0 ? hi : lo) = x;
        const Real dx = res / jp(x);
        Real x_new = x - dx;
        if (!(x_new > lo && x_new < hi)) x_new = 0.5 * (lo + hi);
        if (x_new == x) break;
        x = x_new;
    }
    return x;
}

Real grid_min_su1(const EntropySpec& U, Real hi) {
    auto f = [&](Real s) { return s > 0.0 ? s * U.u1(s) : 0.0; };
    Real best = 0.0;  // s = 0 endpoint
    Real best_s = 0.0;
    const int n = 8000;
    for (int i = 1; i <= n; ++i) {
        const Real s = hi * i / n;
        if (f(s) < best) {
            best = f(s);
            best_s = s;
        }
    }
    for (int i = 0; i <= 200; ++i) {  // the dip can hide near zero
        const Real s = hi * std::pow(10.0, -12.0 + 12.0 * i / 200.0);
        if (f(s) < best) {
            best = f(s);
            best_s = s;
        }
    }
    if (best_s > 0.0) {
        const Real a = std::max(0.0, best_s - hi / n), b = std::min(hi, best_s + hi / n);
        best = std::min(best, golden_min(f, a, b));
    }
    return best;
}

Real grid_max_abs_u(const EntropySpec& U, Real hi) {
    // U is convex with U(0) = 0: the max of U sits at an endpoint and the min
    // is unimodal.
    const Real umin = golden_min([&](Real s) { return U.u(s); }, 0.0, hi);
    return std::max({std::abs(U.u(hi)), std::abs(umin), 0.0});
}

ThresholdReport compute_thresholds(const ReactionSpec& F, const EntropySpec& U, Real rho0_linf,
                                   Real rho0_l1, Real omega_measure, Real chi, Real lambda,
                                   int dim, Real t_final, Real K3) {
    ThresholdReport rep;
    rep.lambda = lambda;
    rep.chi = chi;
    rep.rho0_linf = rho0_linf;
    rep.rho0_l1 = rho0_l1;
    rep.omega_measure = omega_measure;
    rep.t_final = t_final;
    rep.K3 = K3;

    rep.chi_star = chi_star(rho0_linf, F);
    rep.chi_case = chi_star_case(rho0_linf, F);
    rep.M_star = select_Mstar(rho0_linf, F, lambda, chi);
    rep.eta_Mstar = eta(rep.M_star, F);

    const XiReport xr = xi(rho0_l1, F, omega_measure);
    rep.xi = xr.xi;
    rep.xi_eps = xr.eps;

    const C0Report cr = c0_and_delta(lambda, chi > 0.0 ? chi : 1.0, dim);
    rep.delta_lambda = cr.delta;
    rep.c0 = chi > 0.0 ? cr.c0 : kInf;

    // Largest tau <= 1 keeping both theta_i above their tau = 0 values,
    // located by a bisected sweep on the (monotone) admissibility predicate.
    auto admissible = [&](Real tau) {
        return theta(rep.M_star, tau, rho0_linf, lambda, chi) >=
                   theta(rep.M_star, 0.0, rho0_linf, lambda, chi) &&
               theta(rep.M_star, tau, rep.eta_Mstar, lambda, chi) >=
                   theta(rep.M_star, 0.0, rep.eta_Mstar, lambda, chi);
    };
    if (admissible(1.0)) {
        rep.tau_star = 1.0;
    } else {
        Real a = 0.0, b = 1.0;
        for (int it = 0; it < 100; ++it) {
            const Real mid = 0.5 * (a + b);
            (admissible(mid) ? a : b) = mid;
        }
        rep.tau_star = a;
    }

    rep.tau_hat = std::min({F.alpha > 0.0 ? 1.0 / (2.0 * F.alpha) : kInf,
                            rep.c0 / rho0_linf, rep.tau_star, rep.c0 / rep.eta_Mstar,
                            chi > 0.0 ? omega_measure / (chi * rep.xi) : kInf});
    rep.tau_tilde = chi > 0.0 ? std::min(1.0 / (2.0 * lambda * chi * rho0_linf),
                                         1.0 / (2.0 * lambda * chi * rep.eta_Mstar))
                              : kInf;

    rep.C1 = 2.0 * std::max(rep.eta_Mstar, rho0_linf);
    const Real k0p = F.f1_sup_abs(rep.C1);  // sup |F'| on [0, C1]
    rep.C2 = rep.C1 * k0p;
    rep.tau_double_star =
        std::min(k0p > 0.0 ? 1.0 / (6.0 * k0p) : kInf,
                 F.alpha > 0.0 ? 1.0 / (4.0 * F.alpha) : kInf);

    const Real inf_su1 = grid_min_su1(U, rep.C1);
    rep.C3 = (2.0 * F.alpha * rep.C1 * std::max(U.u1(2.0 * rep.C1), 0.0) +
              3.0 * k0p * std::max(0.0, -inf_su1)) *
             omega_measure;
    rep.C4 = 2.0 * chi * K3 * K3 * rep.C1 * rep.C2 * omega_measure;
    rep.C5 = (4.0 * k0p * rep.C1 * std::max(F.f1(2.0 * rep.C1), 0.0) +
              F.alpha * F.alpha * rep.C1) *
             omega_measure;

    // sup - inf of the drift-diffusion energy over {0 <= rho <= C1}: the
    // internal part is bounded by |Omega| max |U| and the chemical part by
    // the elliptic regularity ratio.
    const Real e1_gap = 2.0 * omega_measure * grid_max_abs_u(U, rep.C1) +
                        0.5 * chi * K3 * rep.C1 * rep.C1 * omega_measure;

    const Real T = t_final;
    rep.C6 = 4.0 * (T * rep.C5 + (rep.C3 + rep.C4) * T + e1_gap);
    rep.C7 = 2.0 * e1_gap + 2.0 * (rep.C3 + rep.C4) * (T + 1.0);
    rep.C8 = K3 * K3 * rep.C1 * rep.C1 * rep.C1 * omega_measure * T;
    rep.C9 = 2.0 * rep.C1 * (rep.C7 + chi * chi * rep.C8);
    return rep;
}

}  // namespace ksjko
