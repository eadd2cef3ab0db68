#include "geoxray/grid.hpp"

#include <cmath>
#include <functional>

namespace geoxray {

Grid::Grid(const Vec3& origin, double h, const Idx3& dims, GridLevel level,
           std::vector<std::uint8_t> mask)
    : origin_(origin), h_(h), dims_(dims), level_(level), mask_(std::move(mask)) {
    if (h <= 0.0 || dims.minCoeff() < 2)
        throw ConfigError("grid needs positive spacing and >= 2 nodes per axis");
    if (mask_.size() != std::size_t(dims[0]) * dims[1] * dims[2])
        throw ConfigError("grid mask size does not match dims");
}

std::shared_ptr<const Grid> Grid::make_ball(const Domain& domain, double h, GridLevel level) {
    // 2-node pad so interpolation cells around boundary nodes stay in the box
    int half = static_cast<int>(std::ceil(domain.radius / h)) + 2;
    int n = 2 * half + 1;
    Vec3 origin = domain.center - h * half * Vec3::Ones();
    Idx3 dims(n, n, n);
    std::vector<std::uint8_t> mask(std::size_t(n) * n * n, 0);
    Grid tmp(origin, h, dims, level, mask);
    for (std::size_t m = 0; m < mask.size(); ++m)
        mask[m] = (tmp.position(m) - domain.center).norm() <= domain.radius ? 1 : 0;
    return std::make_shared<Grid>(origin, h, dims, level, std::move(mask));
}

std::shared_ptr<const Grid> Grid::with_level(GridLevel level) const {
    return std::make_shared<Grid>(origin_, h_, dims_, level, mask_);
}

std::shared_ptr<const Grid> Grid::with_mask(std::vector<std::uint8_t> mask) const {
    for (std::size_t n = 0; n < mask.size(); ++n)
        if (mask[n] && !mask_[n])
            throw GridMismatch("with_mask: sub-mask escapes the parent mask");
    return std::make_shared<Grid>(origin_, h_, dims_, level_, std::move(mask));
}

std::vector<std::size_t> Grid::active_nodes() const {
    std::vector<std::size_t> out;
    for (std::size_t n = 0; n < size(); ++n)
        if (active(n)) out.push_back(n);
    return out;
}

double GridFunction::norm2() const {
    double s = 0.0;
    for (std::size_t n = 0; n < values.size(); ++n)
        if (grid->active(n)) s += values[n] * values[n];
    return std::sqrt(s);
}

double GridFunction::dot(const GridFunction& o) const {
    if (!grid->same_lattice(*o.grid))
        throw GridMismatch("dot: different lattices");
    double s = 0.0;
    for (std::size_t n = 0; n < values.size(); ++n)
        if (grid->active(n)) s += values[n] * o.values[n];
    return s;
}

GridFunction sample_on_grid(std::shared_ptr<const Grid> grid,
                            const std::function<double(const Vec3&)>& f) {
    GridFunction out(grid);
    for (std::size_t n = 0; n < grid->size(); ++n)
        if (grid->active(n)) out[n] = f(grid->position(n));
    return out;
}

bool cell_weights(const Grid& grid, const Vec3& x, CellWeights& out) {
    out.count = 0;
    const Vec3& o = grid.origin();
    double h = grid.spacing();
    int base[3];
    double t[3];
    for (int k = 0; k < 3; ++k) {
        double u = (x[k] - o[k]) / h;
        int c = static_cast<int>(std::floor(u));
        if (c < 0 || c > grid.dims()[k] - 2) {
            // allow roundoff at the outer faces
            if (c == -1 && u > -1e-12)
                c = 0;
            else if (c == grid.dims()[k] - 1 && u < grid.dims()[k] - 1 + 1e-12)
                c = grid.dims()[k] - 2;
            else
                return false;
        }
        base[k] = c;
        t[k] = std::min(std::max(u - c, 0.0), 1.0);
    }
    for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj)
            for (int di = 0; di < 2; ++di) {
                std::size_t n = grid.index(base[0] + di, base[1] + dj, base[2] + dk);
                if (!grid.masked(n)) continue;
                double wx = di ? t[0] : 1 - t[0];
                double wy = dj ? t[1] : 1 - t[1];
                double wz = dk ? t[2] : 1 - t[2];
                double sx = di ? 1.0 : -1.0;
                double sy = dj ? 1.0 : -1.0;
                double sz = dk ? 1.0 : -1.0;
                int c = out.count++;
                out.node[c] = n;
                out.w[c] = wx * wy * wz;
                out.grad[c] = Vec3(sx * wy * wz, wx * sy * wz, wx * wy * sz) / h;
            }
    return out.count > 0;
}

double interpolate(const GridFunction& f, const Vec3& x) {
    CellWeights cw;
    if (!cell_weights(*f.grid, x, cw)) return 0.0;
    double v = 0.0;
    for (int c = 0; c < cw.count; ++c) v += cw.w[c] * f.values[cw.node[c]];
    return v;
}

GridFunction restrict_P(const GridFunction& f_fine) {
    if (f_fine.grid->level() != GridLevel::fine)
        throw GridMismatch("restrict_P expects a fine-grid function");
    GridFunction out(f_fine.grid->with_level(GridLevel::coarse));
    for (std::size_t n = 0; n < out.values.size(); ++n)
        if (out.grid->active(n)) out[n] = f_fine[n];
    return out;
}

GridFunction prolong_Pstar(const GridFunction& f_coarse) {
    if (f_coarse.grid->level() != GridLevel::coarse)
        throw GridMismatch("prolong_Pstar expects a coarse-grid function");
    const Grid& g = *f_coarse.grid;
    GridFunction out(g.with_level(GridLevel::fine));
    for (std::size_t n = 0; n < out.values.size(); ++n) {
        if (!g.masked(n)) continue;
        if (g.coarse_parity(n)) {
            out[n] = f_coarse[n];
            continue;
        }
        Idx3 c = g.coords(n);
        double sum = 0.0;
        int cnt = 0;
        for (int axis = 0; axis < 3; ++axis)
            for (int d = -1; d <= 1; d += 2) {
                Idx3 q = c;
                q[axis] += d;
                if (q[axis] < 0 || q[axis] >= g.dims()[axis]) continue;
                std::size_t m = g.index(q[0], q[1], q[2]);
                if (!g.masked(m)) continue;
                sum += f_coarse[m];
                ++cnt;
            }
        out[n] = cnt ? sum / cnt : 0.0;
    }
    return out;
}

double relative_error(const GridFunction& f_rec, const GridFunction& f_true) {
    if (!f_rec.grid->same_lattice(*f_true.grid))
        throw GridMismatch("relative_error: different lattices");
    double num = 0.0, den = 0.0;
    for (std::size_t n = 0; n < f_rec.values.size(); ++n) {
        if (!f_rec.grid->active(n) || !f_true.grid->active(n)) continue;
        double d = f_rec[n] - f_true[n];
        num += d * d;
        den += f_true[n] * f_true[n];
    }
    if (den == 0.0) throw ZeroReference("relative_error: zero reference norm");
    return std::sqrt(num / den);
}

} // namespace geoxray
