#ifndef GEOXRAY_XRAY_HPP
#define GEOXRAY_XRAY_HPP

#include "geoxray/grid.hpp"
#include "geoxray/speed.hpp"
#include "geoxray/tracer.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace geoxray {

struct XRayRecord {
    PhasePoint x0;
    Geodesic geo;
    double value = 0.0;
};

struct XRayDataSet {
    std::vector<XRayRecord> records;
    std::string provenance = "simulated";
};

// Spatial hash from grid node to the records whose geodesic passes within
// eps of that node. Built by per-sample cell hashing.
class GeodesicIndex {
public:
    GeodesicIndex(std::shared_ptr<const Grid> grid, const std::vector<XRayRecord>& records,
                  double eps);

    const std::vector<int>& bucket(std::size_t node) const { return buckets_[node]; }
    double eps() const { return eps_; }
    const Grid& grid() const { return *grid_; }

    // Fraction of active nodes with a non-empty bucket.
    double coverage() const;

private:
    std::shared_ptr<const Grid> grid_;
    double eps_;
    std::vector<std::vector<int>> buckets_;
};

// |x'(s)| = c(x)^2 |xi| from a stored phase sample (equals c on-shell).
double phase_speed(const SpeedField& field, const GeodesicSample& smp);

// Trapezoidal line integral of a fine-grid function along a geodesic;
// samples outside the mask contribute zero.
double forward(const GridFunction& f, const SpeedField& field, const Geodesic& geo);

// Plain e-neighborhood average of the data values (eq. backprojection);
// nodes with empty buckets get 0 and are counted in *empty_nodes.
GridFunction backproject(const XRayDataSet& data, const GeodesicIndex& idx,
                         std::shared_ptr<const Grid> grid, std::size_t* empty_nodes = nullptr);

GridFunction backproject_values(const std::vector<double>& values, const GeodesicIndex& idx,
                                std::shared_ptr<const Grid> grid,
                                std::size_t* empty_nodes = nullptr);

// Discrete forward transform as a sparse matrix: one row per record, columns
// over the compact active-node numbering of the fine grid. Entries are the
// trapezoid quadrature weights (trilinear weight x |x'| x ds).
struct ForwardMatrix {
    std::shared_ptr<const Grid> grid;
    std::vector<std::size_t> active;     // compact -> lattice node
    std::vector<int> compact;            // lattice node -> compact (-1 outside)
    Eigen::SparseMatrix<double, Eigen::RowMajor> A;

    Eigen::VectorXd to_vector(const GridFunction& f) const;
    GridFunction to_function(const Eigen::VectorXd& v) const;
};

ForwardMatrix assemble_forward_matrix(std::shared_ptr<const Grid> fine, const SpeedField& field,
                                      const std::vector<XRayRecord>& records);

} // namespace geoxray

#endif
