#ifndef GEOXRAY_GRID_HPP
#define GEOXRAY_GRID_HPP

#include "geoxray/types.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace geoxray {

enum class GridLevel { coarse, fine };

// One lattice carries both grids of the two-grid construction: the fine grid
// Z_f is every masked node, the coarse grid Z is the masked checkerboard
// subset with even (i+j+k) parity. Both share the spacing h.
class Grid {
public:
    Grid(const Vec3& origin, double h, const Idx3& dims, GridLevel level,
         std::vector<std::uint8_t> mask);

    // Lattice covering the ball with a small pad, masked to closure of the ball.
    static std::shared_ptr<const Grid> make_ball(const Domain& domain, double h,
                                                 GridLevel level = GridLevel::fine);

    const Vec3& origin() const { return origin_; }
    double spacing() const { return h_; }
    const Idx3& dims() const { return dims_; }
    GridLevel level() const { return level_; }
    std::size_t size() const { return mask_.size(); }

    std::size_t index(int i, int j, int k) const {
        return std::size_t(i) + dims_[0] * (std::size_t(j) + std::size_t(dims_[1]) * k);
    }
    Idx3 coords(std::size_t n) const {
        int i = int(n % dims_[0]);
        int j = int((n / dims_[0]) % dims_[1]);
        int k = int(n / (std::size_t(dims_[0]) * dims_[1]));
        return {i, j, k};
    }
    Vec3 position(std::size_t n) const {
        Idx3 c = coords(n);
        return origin_ + h_ * Vec3(c[0], c[1], c[2]);
    }
    bool masked(std::size_t n) const { return mask_[n] != 0; }
    bool coarse_parity(std::size_t n) const {
        Idx3 c = coords(n);
        return (c[0] + c[1] + c[2]) % 2 == 0;
    }
    // Node carries a degree of freedom at this grid's level.
    bool active(std::size_t n) const {
        return masked(n) && (level_ == GridLevel::fine || coarse_parity(n));
    }
    const std::vector<std::uint8_t>& mask() const { return mask_; }

    // Same lattice, other level / restricted mask. The sub-mask must be a
    // subset of the current one.
    std::shared_ptr<const Grid> with_level(GridLevel level) const;
    std::shared_ptr<const Grid> with_mask(std::vector<std::uint8_t> mask) const;

    bool same_lattice(const Grid& o) const {
        return (origin_ - o.origin_).norm() < 1e-12 && std::abs(h_ - o.h_) < 1e-15 &&
               (dims_.array() == o.dims_.array()).all();
    }

    std::vector<std::size_t> active_nodes() const;

private:
    Vec3 origin_;
    double h_;
    Idx3 dims_;
    GridLevel level_;
    std::vector<std::uint8_t> mask_;
};

// Scalar field on the active nodes of a grid. Values are stored over the
// full lattice; non-active nodes stay zero and are ignored by norms.
struct GridFunction {
    std::shared_ptr<const Grid> grid;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(std::shared_ptr<const Grid> g)
        : grid(std::move(g)), values(grid->size(), 0.0) {}

    double& operator[](std::size_t n) { return values[n]; }
    double operator[](std::size_t n) const { return values[n]; }

    double norm2() const;
    double dot(const GridFunction& o) const;
};

// Samples an arbitrary f(x) on the active nodes.
GridFunction sample_on_grid(std::shared_ptr<const Grid> grid,
                            const std::function<double(const Vec3&)>& f);

// Trilinear interpolation of a fine-grid function; masked-out corner nodes
// contribute zero. Queries outside the lattice box return 0.
double interpolate(const GridFunction& f, const Vec3& x);

// Trilinear corner weights of the cell containing x; skips nodes clipped by
// the mask. Gradient weights are the cell-wise derivatives of the basis.
struct CellWeights {
    int count = 0;
    std::size_t node[8];
    double w[8];
    Vec3 grad[8];
};
bool cell_weights(const Grid& grid, const Vec3& x, CellWeights& out);

// Restriction P: samples a fine function at the coarse subset Z.
GridFunction restrict_P(const GridFunction& f_fine);

// Prolongation P*: coarse nodes keep their values; complementary fine nodes
// receive the average of their masked coarse axis-neighbors.
GridFunction prolong_Pstar(const GridFunction& f_coarse);

// ||a - b|| / ||b|| over common active nodes.
double relative_error(const GridFunction& f_rec, const GridFunction& f_true);

} // namespace geoxray

#endif
