#include "ksjko/fields.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace ksjko {

Real mass(const DensityField& rho) { return rho.values.sum() * rho.grid.cell_measure(); }

Real lp_norm(const DensityField& rho, Real p) {
    if (std::isinf(p)) return linf(rho);
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1 or infinity");
    const Real meas = rho.grid.cell_measure();
    if (p == 1.0) return rho.values.sum() * meas;
    if (p == 2.0) return std::sqrt(rho.values.square().sum() * meas);
    return std::pow(rho.values.pow(p).sum() * meas, 1.0 / p);
}

Real linf(const DensityField& rho) { return rho.values.size() ? rho.values.maxCoeff() : 0.0; }

namespace {

// d/dx along a line of n values with spacing h. Interior centered, boundary
// one-sided three-point (both second order).
void diff_line(const Real* f, Real* out, int n, Real h, int stride) {
    auto at = [&](int i) { return f[i * stride]; };
    if (n == 1) {
        out[0] = 0.0;
        return;
    }
    if (n == 2) {
        const Real d = (at(1) - at(0)) / h;
        out[0] = d;
        out[stride] = d;
        return;
    }
    out[0] = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
    for (int i = 1; i < n - 1; ++i) out[i * stride] = (at(i + 1) - at(i - 1)) / (2.0 * h);
    out[(n - 1) * stride] =
        (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
}

}  // namespace

std::vector<ScalarField> gradient(const ScalarField& f) {
    const GridSpec& g = f.grid;
    std::vector<ScalarField> out;
    const int nx = g.cells[0];
    const int ny = g.dim == 2 ? g.cells[1] : 1;
    {
        Array dx(g.size());
        for (int j = 0; j < ny; ++j)
            diff_line(f.values.data() + g.index(0, j), dx.data() + g.index(0, j), nx,
                      g.cell_width(0), 1);
        out.emplace_back(g, std::move(dx));
    }
    if (g.dim == 2) {
        Array dy(g.size());
        for (int i = 0; i < nx; ++i)
            diff_line(f.values.data() + g.index(i, 0), dy.data() + g.index(i, 0), ny,
                      g.cell_width(1), nx);
        out.emplace_back(g, std::move(dy));
    }
    return out;
}

std::string format_real(Real v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_snapshot(const DensityField& rho, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_snapshot: cannot open " + path);
    const GridSpec& g = rho.grid;
    if (g.dim == 1) {
        out << "x,rho\n";
        for (int i = 0; i < g.cells[0]; ++i)
            out << format_real(g.center(0, i)) << ',' << format_real(rho.values[i]) << '\n';
    } else {
        out << "x,y,rho\n";
        for (int j = 0; j < g.cells[1]; ++j)
            for (int i = 0; i < g.cells[0]; ++i)
                out << format_real(g.center(0, i)) << ',' << format_real(g.center(1, j)) << ','
                    << format_real(rho.values[g.index(i, j)]) << '\n';
    }
}

DensityField read_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_snapshot: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("read_snapshot: empty file " + path);
    const bool two_d = header == "x,y,rho";
    if (!two_d && header != "x,rho")
        throw std::runtime_error("read_snapshot: unrecognized header '" + header + "'");

    std::vector<Real> xs, ys, vs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string tok;
        std::vector<Real> row;
        while (std::getline(ss, tok, ',')) row.push_back(std::stod(tok));
        if (row.size() != (two_d ? 3u : 2u))
            throw std::runtime_error("read_snapshot: malformed row '" + line + "'");
        xs.push_back(row[0]);
        if (two_d) ys.push_back(row[1]);
        vs.push_back(row.back());
    }
    if (vs.empty()) throw std::runtime_error("read_snapshot: no data rows in " + path);

    // Reconstruct the uniform grid from the cell centers.
    auto axis_of = [](const std::vector<Real>& c) {
        Real lo = c[0], hi = c[0];
        for (Real v : c) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        // distinct sorted values
        std::vector<Real> u = c;
        std::sort(u.begin(), u.end());
        u.erase(std::unique(u.begin(), u.end(),
                            [&](Real a, Real b) { return std::abs(a - b) <= 1e-12 * (1 + hi); }),
                u.end());
        const int n = static_cast<int>(u.size());
        const Real h = n > 1 ? (hi - lo) / (n - 1) : 2.0 * lo;
        return std::pair<int, Real>(n, n > 1 ? h * n : 2.0 * lo);
    };

    if (!two_d) {
        auto [n, len] = axis_of(xs);
        if (static_cast<size_t>(n) != vs.size())
            throw std::runtime_error("read_snapshot: rows do not form a 1D grid");
        GridSpec g(len, n);
        Array v(n);
        for (int i = 0; i < n; ++i) {
            const int idx = static_cast<int>(std::llround(xs[i] / g.cell_width(0) - 0.5));
            v[idx] = vs[i];
        }
        return DensityField(g, std::move(v));
    }
    auto [nx, lx] = axis_of(xs);
    auto [ny, ly] = axis_of(ys);
    if (static_cast<size_t>(nx) * ny != vs.size())
        throw std::runtime_error("read_snapshot: rows do not form a 2D grid");
    GridSpec g(lx, ly, nx, ny);
    Array v(g.size());
    for (size_t k = 0; k < vs.size(); ++k) {
        const int i = static_cast<int>(std::llround(xs[k] / g.cell_width(0) - 0.5));
        const int j = static_cast<int>(std::llround(ys[k] / g.cell_width(1) - 0.5));
        v[g.index(i, j)] = vs[k];
    }
    return DensityField(g, std::move(v));
}

}  // namespace ksjko
