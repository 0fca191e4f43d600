#pragma once

#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace ksjko {

using Real = double;
using Array = Eigen::ArrayXd;

/// Uniform cell-centered grid on a rectangle [0,L0] x [0,L1] (or an interval
/// when dim == 1). Cell widths are derived, h_i = L_i / N_i.
struct GridSpec {
    int dim = 1;
    std::array<Real, 2> lengths{1.0, 1.0};
    std::array<int, 2> cells{1, 1};

    GridSpec() = default;
    GridSpec(Real length, int n) : dim(1), lengths{length, 1.0}, cells{n, 1} { validate(); }
    GridSpec(Real lx, Real ly, int nx, int ny) : dim(2), lengths{lx, ly}, cells{nx, ny} {
        validate();
    }

    void validate() const {
        if (dim != 1 && dim != 2) throw std::invalid_argument("GridSpec: dim must be 1 or 2");
        for (int a = 0; a < dim; ++a) {
            if (lengths[a] <= 0.0) throw std::invalid_argument("GridSpec: lengths must be > 0");
            if (cells[a] < 1) throw std::invalid_argument("GridSpec: cells must be >= 1");
        }
    }

    Real cell_width(int axis) const { return lengths[axis] / cells[axis]; }
    /// Measure of one cell, prod_i h_i.
    Real cell_measure() const {
        Real m = cell_width(0);
        if (dim == 2) m *= cell_width(1);
        return m;
    }
    /// |Omega|
    Real measure() const {
        Real m = lengths[0];
        if (dim == 2) m *= lengths[1];
        return m;
    }
    Eigen::Index size() const {
        return static_cast<Eigen::Index>(cells[0]) * (dim == 2 ? cells[1] : 1);
    }
    /// Flat index of cell (ix, iy); values are stored x-fastest.
    Eigen::Index index(int ix, int iy = 0) const {
        return static_cast<Eigen::Index>(ix) + static_cast<Eigen::Index>(cells[0]) * iy;
    }
    Real center(int axis, int i) const { return (i + 0.5) * cell_width(axis); }

    bool operator==(const GridSpec& o) const {
        if (dim != o.dim) return false;
        for (int a = 0; a < dim; ++a)
            if (lengths[a] != o.lengths[a] || cells[a] != o.cells[a]) return false;
        return true;
    }
};

/// Cell-averaged nonnegative density. Value semantics throughout: operations
/// return new fields so the scheme's half/full iterates stay auditable.
struct DensityField {
    GridSpec grid;
    Array values;

    DensityField() = default;
    DensityField(GridSpec g, Array v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw std::invalid_argument("DensityField: value count does not match grid");
        if ((values < 0.0).any())
            throw std::invalid_argument("DensityField: negative density value");
        if (!values.isFinite().all())
            throw std::invalid_argument("DensityField: non-finite density value");
    }
    static DensityField constant(GridSpec g, Real c) {
        return DensityField(g, Array::Constant(g.size(), c));
    }
};

/// Signed cell-centered scalar field (chemoattractant, potentials, residuals).
struct ScalarField {
    GridSpec grid;
    Array values;

    ScalarField() = default;
    ScalarField(GridSpec g, Array v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.size())
            throw std::invalid_argument("ScalarField: value count does not match grid");
        if (!values.isFinite().all())
            throw std::invalid_argument("ScalarField: non-finite value");
    }
    static ScalarField zero(GridSpec g) { return ScalarField(g, Array::Zero(g.size())); }
};

Real mass(const DensityField& rho);
Real lp_norm(const DensityField& rho, Real p);
Real linf(const DensityField& rho);

/// Per-axis centered differences in the interior, second-order one-sided at
/// the boundary (exact for affine data).
std::vector<ScalarField> gradient(const ScalarField& f);

/// Snapshot format: CSV with header `x,rho` (1D) or `x,y,rho` (2D), one row
/// per cell center, 17 significant digits.
void write_snapshot(const DensityField& rho, const std::string& path);
DensityField read_snapshot(const std::string& path);

std::string format_real(Real v);

}  // namespace ksjko
