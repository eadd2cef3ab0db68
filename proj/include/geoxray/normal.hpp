#ifndef GEOXRAY_NORMAL_HPP
#define GEOXRAY_NORMAL_HPP

#include "geoxray/xray.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <functional>

namespace geoxray {

struct KrylovOptions {
    double tol = 1e-8;
    int max_iters = 500;
    int restart = 50;
    // accept a stagnated solve as long as the residual stays below this;
    // rank-deficient disk systems stall slightly above tol, and anything this
    // small is negligible next to the series truncation error
    double stall = 1e-5;
};

struct KrylovReport {
    int iterations = 0;
    double residual = 0.0;
};

// Fine-grid normal operator A*A of the two-grid scheme plus the regularized
// solve (A*A - delta Laplacian) u = rhs.
//
// A is the discrete transform (quadrature rows over the data geodesics) and
// A* its exact transpose. apply_normal additionally normalizes each node by
// the total quadrature weight landing on it, which turns A*(A u) into a
// weighted e-neighborhood average of line integrals, the same scale as the
// data-side back-projection.
class NormalOperator {
public:
    NormalOperator(std::shared_ptr<const Grid> fine, const SpeedField& field,
                   const std::vector<XRayRecord>& records, double delta);

    const ForwardMatrix& forward_matrix() const { return fm_; }
    double delta() const { return delta_; }
    std::size_t unknowns() const { return fm_.active.size(); }

    Eigen::VectorXd apply_A(const Eigen::VectorXd& u) const { return fm_.A * u; }
    Eigen::VectorXd apply_Astar(const Eigen::VectorXd& v) const { return At_ * v; }

    // D_w A^T A u (weighted average of line integrals per node)
    Eigen::VectorXd apply_normal(const Eigen::VectorXd& u) const;
    GridFunction apply_normal(const GridFunction& u) const;

    // Same node normalization applied to a back-projected ray vector.
    Eigen::VectorXd normalize_backprojection(const Eigen::VectorXd& v) const;

    // 7-point stencil restricted to masked neighbors (zero-flux rim).
    Eigen::VectorXd apply_laplacian(const Eigen::VectorXd& u) const;
    GridFunction apply_laplacian(const GridFunction& u) const;

    // Full system operator (A*A - delta Laplacian) u.
    Eigen::VectorXd apply_system(const Eigen::VectorXd& u) const;

    Eigen::VectorXd solve_regularized(const Eigen::VectorXd& rhs, const KrylovOptions& opt = {},
                                      KrylovReport* report = nullptr) const;
    GridFunction solve_regularized(const GridFunction& rhs, const KrylovOptions& opt = {},
                                   KrylovReport* report = nullptr) const;

private:
    ForwardMatrix fm_;
    Eigen::SparseMatrix<double, Eigen::RowMajor> At_;
    Eigen::VectorXd inv_weight_; // 1 / sum of |A| column mass, 0 where empty
    std::vector<std::array<int, 6>> neighbors_;
    double delta_;
    double h_;
};

// Restarted GMRES on a matrix-free operator; monotone residual.
Eigen::VectorXd gmres(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                      const Eigen::VectorXd& rhs, const KrylovOptions& opt, KrylovReport* report);

} // namespace geoxray

#endif
