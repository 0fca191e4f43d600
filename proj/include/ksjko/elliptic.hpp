#pragma once

#include <memory>
#include <vector>

#include "ksjko/fields.hpp"

namespace ksjko {
namespace elliptic {

enum class Bc { neumann_screened, dirichlet_poisson };

struct EllipticConfig {
    Bc bc = Bc::neumann_screened;
    Real Lambda = 1.0;  // screening rate, > 0 in the Neumann case
};

struct Solution {
    ScalarField c;
    std::vector<ScalarField> grad_c;  // per axis, differentiated in the transform basis
};

/// Solve -Laplacian c + Lambda c = rho (Neumann, cosine basis) or
/// -Laplacian c = rho with c = 0 on the boundary (Dirichlet, sine basis).
/// The basis diagonalizes the three-point finite-volume operator exactly.
ScalarField solve(const DensityField& rho, const EllipticConfig& cfg);
Solution solve_full(const DensityField& rho, const EllipticConfig& cfg);

/// ||-Lap_h c + Lambda c - rho||_inf with the configured ghost convention.
Real residual_inf(const DensityField& rho, const ScalarField& c, const EllipticConfig& cfg);

/// (||c||_inf + ||grad c||_inf) / ||rho||_inf, the empirical regularity ratio.
Real regularity_ratio(const DensityField& rho, const EllipticConfig& cfg);

/// sup of regularity_ratio over single modes plus random fields; the K3 the
/// diagnostics constants use. Deterministic for a fixed seed.
Real empirical_k3(const GridSpec& grid, const EllipticConfig& cfg, int random_samples = 100,
                  unsigned seed = 20240901u);

/// <rho, c[rho]> with cell-measure weights; equals the H1-type energy
/// integral of the screened equation for the exact solution operator and is
/// symmetric positive semidefinite in rho.
Real energy_pairing(const DensityField& rho, const EllipticConfig& cfg);

}  // namespace elliptic
}  // namespace ksjko
