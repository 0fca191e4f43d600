#include "ksjko/elliptic.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <random>

namespace ksjko {
namespace elliptic {

namespace {

constexpr Real kPi = 3.14159265358979323846;

// Per grid-size transform tables. cos_basis(i,k) = cos(pi k (i+1/2)/n),
// sin_basis(i,k) = sin(pi (k+1) (i+1/2)/n). Both diagonalize the three-point
// operator: eigenvalue factor 2(1 - cos(pi m / n)) / h^2 for mode m.
struct Plan {
    int n;
    Eigen::MatrixXd cos_basis;   // n x n, modes 0..n-1
    Eigen::MatrixXd sin_basis;   // n x n, modes 1..n
    Eigen::VectorXd cos_scale;   // forward DCT scaling per mode
    Eigen::VectorXd sin_scale;   // forward DST scaling per mode
    Eigen::VectorXd one_minus_cos;       // 1 - cos(pi k / n), k = 0..n-1
    Eigen::VectorXd one_minus_cos_sin;   // 1 - cos(pi (k+1) / n), k = 0..n-1

    explicit Plan(int n_) : n(n_) {
        cos_basis.resize(n, n);
        sin_basis.resize(n, n);
        cos_scale.resize(n);
        sin_scale.resize(n);
        one_minus_cos.resize(n);
        one_minus_cos_sin.resize(n);
        for (int k = 0; k < n; ++k) {
            for (int i = 0; i < n; ++i) {
                cos_basis(i, k) = std::cos(kPi * k * (i + 0.5) / n);
                sin_basis(i, k) = std::sin(kPi * (k + 1) * (i + 0.5) / n);
            }
            cos_scale[k] = (k == 0 ? 1.0 : 2.0) / n;
            sin_scale[k] = (k == n - 1 ? 1.0 : 2.0) / n;
            one_minus_cos[k] = 1.0 - std::cos(kPi * k / n);
            one_minus_cos_sin[k] = 1.0 - std::cos(kPi * (k + 1) / n);
        }
    }
};

const Plan& plan_for(int n) {
    static std::mutex mu;
    static std::map<int, std::unique_ptr<Plan>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, std::make_unique<Plan>(n)).first;
    return *it->second;
}

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Forward transform along both axes of the x-fastest flattened field.
Mat forward(const Array& values, const GridSpec& g, bool dirichlet) {
    const int nx = g.cells[0], ny = g.dim == 2 ? g.cells[1] : 1;
    Eigen::Map<const Mat> M(values.data(), nx, ny);
    const Plan& px = plan_for(nx);
    const Mat& Bx = dirichlet ? px.sin_basis : px.cos_basis;
    const Vec& sx = dirichlet ? px.sin_scale : px.cos_scale;
    Mat coef = sx.asDiagonal() * (Bx.transpose() * M);
    if (ny > 1) {
        const Plan& py = plan_for(ny);
        const Mat& By = dirichlet ? py.sin_basis : py.cos_basis;
        const Vec& sy = dirichlet ? py.sin_scale : py.cos_scale;
        coef = (coef * By) * sy.asDiagonal();
    }
    return coef;
}

Array inverse(const Mat& coef, const GridSpec& g, bool dirichlet) {
    const int nx = g.cells[0], ny = g.dim == 2 ? g.cells[1] : 1;
    const Plan& px = plan_for(nx);
    const Mat& Bx = dirichlet ? px.sin_basis : px.cos_basis;
    Mat M = Bx * coef;
    if (ny > 1) {
        const Plan& py = plan_for(ny);
        const Mat& By = dirichlet ? py.sin_basis : py.cos_basis;
        M = M * By.transpose();
    }
    Array out(g.size());
    Eigen::Map<Mat>(out.data(), nx, ny) = M;
    return out;
}

Vec laplace_eigs(const GridSpec& g, int axis, bool dirichlet) {
    const int n = g.cells[axis];
    const Real h = g.cell_width(axis);
    const Plan& p = plan_for(n);
    return (2.0 / (h * h)) * (dirichlet ? p.one_minus_cos_sin : p.one_minus_cos);
}

void check_cfg(const EllipticConfig& cfg) {
    if (cfg.bc == Bc::neumann_screened && cfg.Lambda <= 0.0)
        throw std::invalid_argument("elliptic: Lambda must be > 0 with Neumann conditions");
}

Mat solve_coefficients(const DensityField& rho, const EllipticConfig& cfg) {
    check_cfg(cfg);
    const GridSpec& g = rho.grid;
    const bool dir = cfg.bc == Bc::dirichlet_poisson;
    Mat coef = forward(rho.values, g, dir);
    const Vec lx = laplace_eigs(g, 0, dir);
    const Real shift = dir ? 0.0 : cfg.Lambda;
    if (g.dim == 1) {
        for (int k = 0; k < coef.rows(); ++k) coef(k, 0) /= lx[k] + shift;
    } else {
        const Vec ly = laplace_eigs(g, 1, dir);
        for (int l = 0; l < coef.cols(); ++l)
            for (int k = 0; k < coef.rows(); ++k) coef(k, l) /= lx[k] + ly[l] + shift;
    }
    return coef;
}

// Derivative of the interpolant along `axis`, evaluated at cell centers.
// Cosine series differentiate into sine series and vice versa.
Array spectral_derivative(const Mat& coef, const GridSpec& g, bool dirichlet, int axis) {
    const int nx = g.cells[0], ny = g.dim == 2 ? g.cells[1] : 1;
    const Plan& px = plan_for(nx);
    Mat dcoef = coef;
    if (axis == 0) {
        if (!dirichlet) {
            // d/dx cos(pi k x / L) = -(pi k / L) sin(pi k x / L); mode 0 drops.
            Mat shifted = Mat::Zero(nx, ny);
            for (int k = 1; k < nx; ++k)
                shifted.row(k - 1) = -(kPi * k / g.lengths[0]) * dcoef.row(k);
            Mat M = px.sin_basis * shifted;
            if (ny > 1) M = M * plan_for(ny).cos_basis.transpose();
            Array out(g.size());
            Eigen::Map<Mat>(out.data(), nx, ny) = M;
            return out;
        }
        // d/dx sin(pi m x / L) = (pi m / L) cos(pi m x / L), modes m = 1..n.
        Mat shifted = Mat::Zero(nx, ny);
        for (int k = 0; k < nx; ++k) {
            const int m = k + 1;
            if (m < nx)  // the cosine table holds modes 0..n-1; mode n is dropped
                shifted.row(m) = (kPi * m / g.lengths[0]) * dcoef.row(k);
        }
        Mat M = px.cos_basis * shifted;
        if (ny > 1) M = M * plan_for(ny).sin_basis.transpose();
        Array out(g.size());
        Eigen::Map<Mat>(out.data(), nx, ny) = M;
        return out;
    }
    // axis == 1
    const Plan& py = plan_for(ny);
    if (!dirichlet) {
        Mat shifted = Mat::Zero(nx, ny);
        for (int l = 1; l < ny; ++l)
            shifted.col(l - 1) = -(kPi * l / g.lengths[1]) * dcoef.col(l);
        Mat M = (px.cos_basis * shifted) * py.sin_basis.transpose();
        Array out(g.size());
        Eigen::Map<Mat>(out.data(), nx, ny) = M;
        return out;
    }
    Mat shifted = Mat::Zero(nx, ny);
    for (int l = 0; l < ny; ++l) {
        const int m = l + 1;
        if (m < ny) shifted.col(m) = (kPi * m / g.lengths[1]) * dcoef.col(l);
    }
    Mat M = (px.sin_basis * shifted) * py.cos_basis.transpose();
    Array out(g.size());
    Eigen::Map<Mat>(out.data(), nx, ny) = M;
    return out;
}

}  // namespace

ScalarField solve(const DensityField& rho, const EllipticConfig& cfg) {
    const bool dir = cfg.bc == Bc::dirichlet_poisson;
    Mat coef = solve_coefficients(rho, cfg);
    return ScalarField(rho.grid, inverse(coef, rho.grid, dir));
}

Solution solve_full(const DensityField& rho, const EllipticConfig& cfg) {
    const bool dir = cfg.bc == Bc::dirichlet_poisson;
    Mat coef = solve_coefficients(rho, cfg);
    Solution sol;
    sol.c = ScalarField(rho.grid, inverse(coef, rho.grid, dir));
    sol.grad_c.emplace_back(rho.grid, spectral_derivative(coef, rho.grid, dir, 0));
    if (rho.grid.dim == 2)
        sol.grad_c.emplace_back(rho.grid, spectral_derivative(coef, rho.grid, dir, 1));
    return sol;
}

Real residual_inf(const DensityField& rho, const ScalarField& c, const EllipticConfig& cfg) {
    check_cfg(cfg);
    const GridSpec& g = rho.grid;
    const bool dir = cfg.bc == Bc::dirichlet_poisson;
    const Real shift = dir ? 0.0 : cfg.Lambda;
    const int nx = g.cells[0], ny = g.dim == 2 ? g.cells[1] : 1;
    auto ghost = [&](Real inner) { return dir ? -inner : inner; };
    Real worst = 0.0;
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            const Real v = c.values[g.index(i, j)];
            Real lap = 0.0;
            {
                const Real h = g.cell_width(0);
                const Real left = i > 0 ? c.values[g.index(i - 1, j)] : ghost(v);
                const Real right = i < nx - 1 ? c.values[g.index(i + 1, j)] : ghost(v);
                lap += (left - 2.0 * v + right) / (h * h);
            }
            if (g.dim == 2) {
                const Real h = g.cell_width(1);
                const Real down = j > 0 ? c.values[g.index(i, j - 1)] : ghost(v);
                const Real up = j < ny - 1 ? c.values[g.index(i, j + 1)] : ghost(v);
                lap += (down - 2.0 * v + up) / (h * h);
            }
            worst = std::max(worst,
                             std::abs(-lap + shift * v - rho.values[g.index(i, j)]));
        }
    }
    return worst;
}

Real regularity_ratio(const DensityField& rho, const EllipticConfig& cfg) {
    const Real rinf = linf(rho);
    if (rinf <= 0.0) throw std::invalid_argument("regularity_ratio: ||rho||_inf must be > 0");
    Solution sol = solve_full(rho, cfg);
    Array gsq = sol.grad_c[0].values.square();
    if (rho.grid.dim == 2) gsq += sol.grad_c[1].values.square();
    return (sol.c.values.abs().maxCoeff() + std::sqrt(gsq.maxCoeff())) / rinf;
}

Real empirical_k3(const GridSpec& grid, const EllipticConfig& cfg, int random_samples,
                  unsigned seed) {
    Real k3 = 0.0;
    const bool dir = cfg.bc == Bc::dirichlet_poisson;
    // single modes (1D along x is enough to excite the worst ratio scale)
    if (grid.dim == 1) {
        const int n = grid.cells[0];
        for (int k = 0; k < n; ++k) {
            Array v(n);
            for (int i = 0; i < n; ++i) {
                const Real x = kPi * (dir ? k + 1 : k) * (i + 0.5) / n;
                v[i] = 1.0 + (dir ? std::sin(x) : std::cos(x));
            }
            k3 = std::max(k3, regularity_ratio(DensityField(grid, v), cfg));
        }
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<Real> unif(0.0, 1.0);
    for (int s = 0; s < random_samples; ++s) {
        Array v(grid.size());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = unif(rng);
        k3 = std::max(k3, regularity_ratio(DensityField(grid, v), cfg));
    }
    return 1.05 * k3;
}

Real energy_pairing(const DensityField& rho, const EllipticConfig& cfg) {
    ScalarField c = solve(rho, cfg);
    return (rho.values * c.values).sum() * rho.grid.cell_measure();
}

}  // namespace elliptic
}  // namespace ksjko
