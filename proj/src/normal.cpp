#include "geoxray/normal.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace geoxray {

NormalOperator::NormalOperator(std::shared_ptr<const Grid> fine, const SpeedField& field,
                               const std::vector<XRayRecord>& records, double delta)
    : fm_(assemble_forward_matrix(fine, field, records)), delta_(delta), h_(fine->spacing()) {
    At_ = fm_.A.transpose();

    inv_weight_.resize(fm_.active.size());
    Eigen::VectorXd colmass = Eigen::VectorXd::Zero(fm_.active.size());
    for (int k = 0; k < fm_.A.outerSize(); ++k)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(fm_.A, k); it; ++it)
            colmass[it.col()] += std::abs(it.value());
    for (Eigen::Index i = 0; i < colmass.size(); ++i)
        inv_weight_[i] = colmass[i] > 0.0 ? 1.0 / colmass[i] : 0.0;

    // 7-point neighbor table in compact numbering (-1 = Dirichlet zero)
    const Grid& g = *fm_.grid;
    neighbors_.resize(fm_.active.size());
    for (std::size_t c = 0; c < fm_.active.size(); ++c) {
        Idx3 q = g.coords(fm_.active[c]);
        int slot = 0;
        for (int axis = 0; axis < 3; ++axis)
            for (int d = -1; d <= 1; d += 2) {
                Idx3 p = q;
                p[axis] += d;
                int nb = -1;
                if (p[axis] >= 0 && p[axis] < g.dims()[axis]) {
                    std::size_t m = g.index(p[0], p[1], p[2]);
                    if (fm_.compact[m] >= 0) nb = fm_.compact[m];
                }
                neighbors_[c][slot++] = nb;
            }
    }
}

Eigen::VectorXd NormalOperator::apply_normal(const Eigen::VectorXd& u) const {
    return normalize_backprojection(At_ * (fm_.A * u));
}

GridFunction NormalOperator::apply_normal(const GridFunction& u) const {
    return fm_.to_function(apply_normal(fm_.to_vector(u)));
}

Eigen::VectorXd NormalOperator::normalize_backprojection(const Eigen::VectorXd& v) const {
    return inv_weight_.cwiseProduct(v);
}

Eigen::VectorXd NormalOperator::apply_laplacian(const Eigen::VectorXd& u) const {
    // graph convention at the rim: only neighbors inside the mask enter the
    // stencil (zero normal flux). The interior stencil is the usual 7-point
    // one; a Dirichlet rim would let -delta*Lap dwarf the normal operator on
    // the outermost node shell and stall the series there.
    Eigen::VectorXd out(u.size());
    double inv_h2 = 1.0 / (h_ * h_);
    for (Eigen::Index c = 0; c < u.size(); ++c) {
        double s = 0.0;
        for (int nb : neighbors_[c])
            if (nb >= 0) s += u[nb] - u[c];
        out[c] = s * inv_h2;
    }
    return out;
}

GridFunction NormalOperator::apply_laplacian(const GridFunction& u) const {
    return fm_.to_function(apply_laplacian(fm_.to_vector(u)));
}

Eigen::VectorXd NormalOperator::apply_system(const Eigen::VectorXd& u) const {
    return apply_normal(u) - delta_ * apply_laplacian(u);
}

Eigen::VectorXd NormalOperator::solve_regularized(const Eigen::VectorXd& rhs,
                                                  const KrylovOptions& opt,
                                                  KrylovReport* report) const {
    if (delta_ <= 0.0) throw ConfigError("solve_regularized requires delta > 0");
    return gmres([this](const Eigen::VectorXd& u) { return apply_system(u); }, rhs, opt, report);
}

GridFunction NormalOperator::solve_regularized(const GridFunction& rhs, const KrylovOptions& opt,
                                               KrylovReport* report) const {
    return fm_.to_function(solve_regularized(fm_.to_vector(rhs), opt, report));
}

Eigen::VectorXd gmres(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                      const Eigen::VectorXd& rhs, const KrylovOptions& opt,
                      KrylovReport* report) {
    const double bnorm = rhs.norm();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(rhs.size());
    if (bnorm == 0.0) {
        if (report) *report = {0, 0.0};
        return x;
    }
    const double target = opt.tol * bnorm;
    int total_iters = 0;
    double resid = bnorm;

    while (total_iters < opt.max_iters) {
        Eigen::VectorXd r = rhs - op(x);
        resid = r.norm();
        if (resid <= target) break;

        const int m = std::min(opt.restart, opt.max_iters - total_iters);
        std::vector<Eigen::VectorXd> V;
        V.reserve(m + 1);
        V.push_back(r / resid);
        Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
        Eigen::VectorXd cs(m), sn(m);
        Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
        g[0] = resid;

        int j = 0;
        for (; j < m; ++j) {
            Eigen::VectorXd w = op(V[j]);
            for (int i = 0; i <= j; ++i) { // modified Gram-Schmidt
                H(i, j) = w.dot(V[i]);
                w -= H(i, j) * V[i];
            }
            H(j + 1, j) = w.norm();
            if (H(j + 1, j) > 0.0) V.push_back(w / H(j + 1, j));

            for (int i = 0; i < j; ++i) {
                double t = cs[i] * H(i, j) + sn[i] * H(i + 1, j);
                H(i + 1, j) = -sn[i] * H(i, j) + cs[i] * H(i + 1, j);
                H(i, j) = t;
            }
            double denom = std::hypot(H(j, j), H(j + 1, j));
            if (denom == 0.0) {
                ++j;
                break;
            }
            cs[j] = H(j, j) / denom;
            sn[j] = H(j + 1, j) / denom;
            H(j, j) = denom;
            H(j + 1, j) = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            ++total_iters;
            resid = std::abs(g[j + 1]);
            if (resid <= target) {
                ++j;
                break;
            }
            if (static_cast<int>(V.size()) == j + 1) { // lucky breakdown
                ++j;
                break;
            }
        }
        // back substitution on the j x j triangular system
        Eigen::VectorXd y = Eigen::VectorXd::Zero(j);
        for (int i = j - 1; i >= 0; --i) {
            double s = g[i];
            for (int k2 = i + 1; k2 < j; ++k2) s -= H(i, k2) * y[k2];
            y[i] = s / H(i, i);
        }
        for (int i = 0; i < j; ++i) x += y[i] * V[i];
        if (resid <= target) break;
        if (j == 0) break;
    }

    resid = (rhs - op(x)).norm();
    if (report) *report = {total_iters, resid / bnorm};
    if (resid > std::max(target * (1.0 + 1e-12), opt.stall * bnorm)) {
        std::ostringstream msg;
        msg << "gmres: no convergence after " << total_iters
            << " iterations, relative residual " << resid / bnorm;
        throw NoConvergence(msg.str());
    }
    return x;
}

} // namespace geoxray
