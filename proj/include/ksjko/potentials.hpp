#pragma once

#include <limits>
#include <stdexcept>
#include <string>

#include "ksjko/fields.hpp"

namespace ksjko {

constexpr Real kInf = std::numeric_limits<Real>::infinity();

/// Convex internal-energy density U. Two families plus an optional
/// delta*s*log(s) regularization that restores inf_{s>0} s U''(s) > 0.
struct EntropySpec {
    enum class Kind { boltzmann, power };
    Kind kind = Kind::boltzmann;
    Real m = 2.0;       // power-family exponent, m > 0, m != 1
    Real delta = 0.0;   // regularization weight, >= 0

    static EntropySpec boltzmann(Real delta = 0.0) { return {Kind::boltzmann, 2.0, delta}; }
    static EntropySpec power(Real m, Real delta = 0.0) {
        if (m <= 0.0 || m == 1.0)
            throw std::invalid_argument("EntropySpec: power exponent must be > 0 and != 1");
        return {Kind::power, m, delta};
    }

    Real u(Real s) const;    // U(s)
    Real u1(Real s) const;   // U'(s)
    Real u2(Real s) const;   // U''(s)
    Real psi(Real s) const;  // s U'(s) - U(s), extended by its limit at 0

    /// True iff inf_{s>0} s U''(s) > 0 (boltzmann or delta > 0).
    bool strong_convexity_holds() const {
        return kind == Kind::boltzmann || delta > 0.0;
    }
    /// lim_{s->0+} s U'(s) exists and is finite for both families.
    Real su1_limit0() const { return 0.0; }
};

/// Reaction pair F(s) = beta s^r / r - alpha s, F'(s) = beta s^{r-1} - alpha.
struct ReactionSpec {
    Real alpha = 0.0;  // >= 0
    Real beta = 1.0;   // > 0
    Real r = 2.0;      // > 1

    ReactionSpec() = default;
    ReactionSpec(Real alpha_, Real beta_, Real r_) : alpha(alpha_), beta(beta_), r(r_) {
        if (alpha < 0.0) throw std::invalid_argument("ReactionSpec: alpha must be >= 0");
        if (beta <= 0.0) throw std::invalid_argument("ReactionSpec: beta must be > 0");
        if (r <= 1.0) throw std::invalid_argument("ReactionSpec: r must be > 1");
    }

    Real f(Real s) const { return beta * std::pow(s, r) / r - alpha * s; }
    Real f1(Real s) const { return beta * std::pow(s, r - 1.0) - alpha; }
    Real f2(Real s) const { return beta * (r - 1.0) * std::pow(s, r - 2.0); }
    /// Spatially uniform steady state, F'(s*) = 0.
    Real carrying_capacity() const { return std::pow(alpha / beta, 1.0 / (r - 1.0)); }
    /// sup of |F'| on [0, s_max] (F' is increasing from -alpha).
    Real f1_sup_abs(Real s_max) const {
        return std::max(alpha, std::abs(f1(s_max)));
    }
};

/// eta_M = ((alpha + M)/beta)^{1/(r-1)}
Real eta(Real M, const ReactionSpec& F);

enum class ChiStarCase { r_above_2, r_equal_2, subquadratic_large_rho0, subquadratic_small_rho0 };
std::string to_string(ChiStarCase c);

/// Admissible chemosensitivity threshold; four-case closed form.
Real chi_star(Real rho0_linf, const ReactionSpec& F);
ChiStarCase chi_star_case(Real rho0_linf, const ReactionSpec& F);

/// M with theta_1'(0) > 0 and theta_2'(0) > 0. Closed forms for 1 < r < 2;
/// for r >= 2 a log-grid search balancing bound quality against step-size
/// margin (see decide_Mstar_grid). Rejects lambda*chi >= chi_star.
Real select_Mstar(Real rho0_linf, const ReactionSpec& F, Real lambda, Real chi);

/// theta(tau) = (1 + tau M)(1/q - lambda chi tau), q = rho0_linf or eta.
Real theta(Real M, Real tau, Real q, Real lambda, Real chi);

struct XiReport {
    Real xi = 0.0;
    Real eps = 0.0;   // minimizing epsilon of B_eps / A_eps
    Real A_eps = 0.0;
    Real B_eps = 0.0;
};

/// L1 absorption level xi = max(||rho0||_1, inf_{eps: A_eps>0} B_eps/A_eps),
/// with A_eps = beta k0^{-r} / eps - alpha, B_eps = beta k0^{-r} C_eps / eps,
/// k0 = |Omega|^{1/r'}, C_eps = (r eps)^{-1/(r-1)} / r'.
XiReport xi(Real rho0_l1, const ReactionSpec& F, Real omega_measure);

struct C0Report {
    Real c0 = 0.0;
    Real delta = 0.0;  // delta(lambda)
};

/// c0 = d delta(lambda) / (chi (1 + delta)^d); delta(lambda) is the largest
/// x in (0, cap] with (1+x)^d <= 1 + lambda d x, cap = min(1/(2(d-1)), 1)
/// with cap = 1 for d = 1.
C0Report c0_and_delta(Real lambda, Real chi, int dim);

/// J_tau(s) = s + tau s F'(s) + (tau^2/4) s F'(s)^2 = s (1 + tau F'(s)/2)^2.
Real J_tau(Real s, Real tau, const ReactionSpec& F);
/// Inverse by safeguarded Newton with bisection fallback; requires
/// tau < 1/(2 alpha) when alpha > 0 so J_tau is strictly increasing.
Real J_tau_inverse(Real rho_val, Real tau, const ReactionSpec& F);

/// Every constant the validator needs for a given configuration.
struct ThresholdReport {
    Real chi_star = 0.0;
    ChiStarCase chi_case = ChiStarCase::r_equal_2;
    Real lambda = 1.01;
    Real chi = 0.0;
    Real rho0_linf = 0.0;
    Real rho0_l1 = 0.0;
    Real omega_measure = 1.0;
    Real t_final = 1.0;
    Real K3 = 1.0;

    Real M_star = 0.0;
    Real eta_Mstar = 0.0;
    Real xi = 0.0;
    Real xi_eps = 0.0;
    Real c0 = 0.0;
    Real delta_lambda = 0.0;
    Real tau_star = 0.0;         // largest tau <= 1 with theta_i(tau) >= theta_i(0)
    Real tau_hat = 0.0;
    Real tau_tilde = 0.0;
    Real tau_double_star = 0.0;  // min(1/(6 k0'), 1/(4 alpha)), k0' = sup |F'| on [0, C1]
    Real C1 = 0.0, C2 = 0.0, C3 = 0.0, C4 = 0.0, C5 = 0.0, C6 = 0.0, C7 = 0.0, C8 = 0.0,
         C9 = 0.0;

    Real tau_admissible() const { return std::min({tau_hat, tau_tilde, tau_double_star}); }
};

/// Assemble the full report. K3 is the (empirical) elliptic regularity ratio;
/// pass elliptic::empirical_k3() or a cached value.
ThresholdReport compute_thresholds(const ReactionSpec& F, const EntropySpec& U, Real rho0_linf,
                                   Real rho0_l1, Real omega_measure, Real chi, Real lambda,
                                   int dim, Real t_final, Real K3);

/// min over a dense sample of [0, hi] (used for inf s U'(s) and max |U|).
Real grid_min_su1(const EntropySpec& U, Real hi);
Real grid_max_abs_u(const EntropySpec& U, Real hi);

}  // namespace ksjko
