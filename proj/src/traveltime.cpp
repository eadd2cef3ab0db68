#include "geoxray/traveltime.hpp"

#include <Eigen/LU>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace geoxray {

namespace {

Vec3 clamp_to_lattice(const Grid& g, const Vec3& x) {
    Vec3 y = x;
    for (int k = 0; k < 3; ++k) {
        double lo = g.origin()[k];
        double hi = lo + g.spacing() * (g.dims()[k] - 1);
        y[k] = std::min(std::max(y[k], lo), hi);
    }
    return y;
}

// Interpolated value and gradient of a grid function at x, with the gradient
// taken as central differences of the interpolant at step h — the same
// convention gridded SpeedField derivatives use, so the linearization matches
// the traced dynamics of a perturbed gridded metric.
bool lambda_probe(const GridFunction& lambda, const Vec3& x, double& lam, Vec3& glam) {
    const Grid& g = *lambda.grid;
    CellWeights cw;
    if (!cell_weights(g, x, cw)) return false;
    lam = 0.0;
    for (int c = 0; c < cw.count; ++c) lam += cw.w[c] * lambda[cw.node[c]];
    glam = Vec3::Zero();
    for (int k = 0; k < 3; ++k) {
        Vec3 xp = clamp_to_lattice(g, x + g.spacing() * Vec3::Unit(k));
        Vec3 xm = clamp_to_lattice(g, x - g.spacing() * Vec3::Unit(k));
        CellWeights cp, cm;
        double vp = 0.0, vm = 0.0;
        if (cell_weights(g, xp, cp))
            for (int c = 0; c < cp.count; ++c) vp += cp.w[c] * lambda[cp.node[c]];
        if (cell_weights(g, xm, cm))
            for (int c = 0; c < cm.count; ++c) vm += cm.w[c] * lambda[cm.node[c]];
        glam[k] = (vp - vm) / (xp[k] - xm[k]);
    }
    return true;
}

} // namespace

Vec6 dgV(const SpeedField& field, const GridFunction& lambda, const PhasePoint& p) {
    double lam = 0.0;
    Vec3 glam = Vec3::Zero();
    lambda_probe(lambda, p.x, lam, glam);
    double c = field.value(p.x);
    Vec3 gc = field.gradient(p.x);
    double xi2 = p.xi.squaredNorm();
    Vec6 out;
    out.head<3>() = 2.0 * c * lam * p.xi;
    out.tail<3>() = -(gc * lam + c * glam) * xi2;
    return out;
}

MismatchResult compute_mismatch(const Measurement& m, const SpeedField& trial,
                                const TracerConfig& cfg) {
    auto [geo, jac] = trace_to_time(trial, m.x0, m.t, cfg, true);
    MismatchResult out;
    out.geo = std::move(geo);
    out.jac = std::move(jac);
    const auto& last = out.geo.samples.back();
    Vec6 state;
    state << last.x, last.xi;
    out.d = m.exit_state - state;
    return out;
}

Vec6 LinearizedRay::apply(const GridFunction& lambda) const {
    Vec6 out = Vec6::Zero();
    for (std::size_t c = 0; c < nodes.size(); ++c) out += coeffs[c] * lambda[nodes[c]];
    return out;
}

void LinearizedRay::add_transpose(const Vec6& w, GridFunction& out) const {
    for (std::size_t c = 0; c < nodes.size(); ++c) out[nodes[c]] += coeffs[c].dot(w);
}

LinearizedRay linearized_row(const SpeedField& trial, const Geodesic& geo,
                             const JacobianState& jac, const Grid& fine, double cond_cap) {
    LinearizedRay row;
    if (geo.samples.size() < 2) return row;
    if (jac.J.size() != geo.samples.size())
        throw GridMismatch("linearized_row: jacobian/sample count mismatch");

    const Mat6& J_end = jac.J.back();
    std::unordered_map<std::size_t, std::size_t> slot;
    CellWeights cw;
    for (std::size_t i = 0; i < geo.samples.size(); ++i) {
        const auto& smp = geo.samples[i];
        double ds = 0.0;
        if (i > 0) ds += 0.5 * (smp.s - geo.samples[i - 1].s);
        if (i + 1 < geo.samples.size()) ds += 0.5 * (geo.samples[i + 1].s - smp.s);
        if (ds == 0.0) continue;

        // J(t - s at X(s)) = J(t) J(s)^{-1} by the flow group property
        Eigen::PartialPivLU<Mat6> lu(jac.J[i]);
        if (lu.rcond() < 1.0 / cond_cap)
            throw SingularJacobian("linearized_row: flow jacobian not invertible");
        Mat6 Jfac = J_end * lu.inverse();

        if (!cell_weights(fine, smp.x, cw)) continue;
        double c = trial.value(smp.x);
        Vec3 gc = trial.gradient(smp.x);
        double xi2 = smp.xi.squaredNorm();
        double quad = ds; // Duhamel integral in the flow time, not arclength

        // per-node basis weight and its central-difference gradient, matching
        // the gridded metric's derivative convention
        struct Basis {
            double w = 0.0;
            Vec3 g = Vec3::Zero();
        };
        std::unordered_map<std::size_t, Basis> basis;
        for (int k = 0; k < cw.count; ++k) basis[cw.node[k]].w += cw.w[k];
        for (int a = 0; a < 3; ++a) {
            Vec3 xp = clamp_to_lattice(fine, smp.x + fine.spacing() * Vec3::Unit(a));
            Vec3 xm = clamp_to_lattice(fine, smp.x - fine.spacing() * Vec3::Unit(a));
            double denom = xp[a] - xm[a];
            CellWeights cs;
            if (cell_weights(fine, xp, cs))
                for (int k = 0; k < cs.count; ++k) basis[cs.node[k]].g[a] += cs.w[k] / denom;
            if (cell_weights(fine, xm, cs))
                for (int k = 0; k < cs.count; ++k) basis[cs.node[k]].g[a] -= cs.w[k] / denom;
        }

        for (const auto& [node, b] : basis) {
            Vec6 dv;
            dv.head<3>() = 2.0 * c * b.w * smp.xi;
            dv.tail<3>() = -(gc * b.w + c * b.g) * xi2;
            Vec6 contrib = quad * (Jfac * dv);
            auto it = slot.find(node);
            if (it == slot.end()) {
                slot.emplace(node, row.nodes.size());
                row.nodes.push_back(node);
                row.coeffs.push_back(contrib);
            } else {
                row.coeffs[it->second] += contrib;
            }
        }
    }
    return row;
}

namespace {

struct RaySystem {
    std::shared_ptr<const Grid> fine;
    std::vector<std::size_t> active;
    std::vector<int> compact;
    Eigen::SparseMatrix<double, Eigen::RowMajor> B;  // 6m x n
    Eigen::SparseMatrix<double, Eigen::RowMajor> Bt; // n x 6m
    Eigen::VectorXd inv_weight;
    std::vector<std::array<int, 6>> neighbors;
    double h;

    Eigen::VectorXd to_vector(const GridFunction& f) const {
        Eigen::VectorXd v(active.size());
        for (std::size_t c = 0; c < active.size(); ++c) v[c] = f[active[c]];
        return v;
    }
    GridFunction to_function(const Eigen::VectorXd& v) const {
        GridFunction f(fine);
        for (std::size_t c = 0; c < active.size(); ++c) f[active[c]] = v[c];
        return f;
    }
    Eigen::VectorXd apply_normal(const Eigen::VectorXd& u) const {
        return inv_weight.cwiseProduct(Bt * (B * u));
    }
    Eigen::VectorXd apply_laplacian(const Eigen::VectorXd& u) const {
        // same zero-flux rim convention as NormalOperator::apply_laplacian
        Eigen::VectorXd out(u.size());
        double inv_h2 = 1.0 / (h * h);
        for (Eigen::Index c = 0; c < u.size(); ++c) {
            double s = 0.0;
            for (int nb : neighbors[c])
                if (nb >= 0) s += u[nb] - u[c];
            out[c] = s * inv_h2;
        }
        return out;
    }
};

RaySystem build_ray_system(const std::vector<LinearizedRay>& rays, const Region& region) {
    RaySystem sys;
    sys.fine = region.fine;
    sys.active = region.fine->active_nodes();
    sys.compact.assign(region.fine->size(), -1);
    for (std::size_t c = 0; c < sys.active.size(); ++c) sys.compact[sys.active[c]] = int(c);
    sys.h = region.fine->spacing();

    std::vector<Eigen::Triplet<double>> trips;
    for (std::size_t r = 0; r < rays.size(); ++r)
        for (std::size_t c = 0; c < rays[r].nodes.size(); ++c) {
            int col = sys.compact[rays[r].nodes[c]];
            if (col < 0) continue;
            for (int k = 0; k < 6; ++k)
                trips.emplace_back(int(6 * r + k), col, rays[r].coeffs[c][k]);
        }
    sys.B.resize(int(6 * rays.size()), int(sys.active.size()));
    sys.B.setFromTriplets(trips.begin(), trips.end());
    sys.Bt = sys.B.transpose();

    Eigen::VectorXd colmass = Eigen::VectorXd::Zero(sys.active.size());
    for (int k = 0; k < sys.B.outerSize(); ++k)
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(sys.B, k); it; ++it)
            colmass[it.col()] += std::abs(it.value());
    // floor the normalization at a fraction of the median column mass:
    // nodes grazed by a single ray corner otherwise get their tiny signal
    // amplified into wild updates
    std::vector<double> pos;
    pos.reserve(colmass.size());
    for (Eigen::Index i = 0; i < colmass.size(); ++i)
        if (colmass[i] > 0.0) pos.push_back(colmass[i]);
    double floor_mass = 0.0;
    if (!pos.empty()) {
        std::nth_element(pos.begin(), pos.begin() + pos.size() / 2, pos.end());
        floor_mass = 0.2 * pos[pos.size() / 2];
    }
    sys.inv_weight.resize(colmass.size());
    for (Eigen::Index i = 0; i < colmass.size(); ++i)
        sys.inv_weight[i] =
            colmass[i] > 0.0 ? 1.0 / std::max(colmass[i], floor_mass) : 0.0;

    const Grid& g = *region.fine;
    sys.neighbors.resize(sys.active.size());
    for (std::size_t c = 0; c < sys.active.size(); ++c) {
        Idx3 q = g.coords(sys.active[c]);
        int slot = 0;
        for (int axis = 0; axis < 3; ++axis)
            for (int d = -1; d <= 1; d += 2) {
                Idx3 p = q;
                p[axis] += d;
                int nb = -1;
                if (p[axis] >= 0 && p[axis] < g.dims()[axis]) {
                    std::size_t m = g.index(p[0], p[1], p[2]);
                    if (sys.compact[m] >= 0) nb = sys.compact[m];
                }
                sys.neighbors[c][slot++] = nb;
            }
    }
    return sys;
}

} // namespace

GridFunction invert_update(const std::vector<LinearizedRay>& rays, const std::vector<Vec6>& d,
                           const Region& region, int N, double delta,
                           const KrylovOptions& krylov) {
    if (rays.empty()) throw NoValidRays("invert_update: no rays");
    if (rays.size() != d.size())
        throw ConfigError("invert_update: ray/mismatch count mismatch");

    RaySystem sys = build_ray_system(rays, region);
    auto system_op = [&](const Eigen::VectorXd& u) {
        return (sys.apply_normal(u) - delta * sys.apply_laplacian(u)).eval();
    };

    // disk systems are small but near-singular; restarted GMRES stagnates on
    // them, so run full GMRES
    KrylovOptions kv = krylov;
    kv.restart = kv.max_iters;

    Eigen::VectorXd dvec(6 * d.size());
    for (std::size_t r = 0; r < d.size(); ++r) dvec.segment<6>(6 * r) = d[r];

    // the update lives on the fine lattice: disks are often one cell thick
    // and the two-grid restriction cannot represent their radial profile
    auto solve_from_rays = [&](const Eigen::VectorXd& v) {
        Eigen::VectorXd rhs = sys.inv_weight.cwiseProduct(sys.Bt * v);
        Eigen::VectorXd u = gmres(system_op, rhs, kv, nullptr);
        return sys.to_function(u);
    };

    GridFunction term = solve_from_rays(dvec);
    GridFunction sum = term;
    double prev_inc = term.norm2();
    int growth_streak = 0;
    for (int n = 1; n <= N; ++n) {
        Eigen::VectorXd sim = sys.B * sys.to_vector(term);
        GridFunction corr = solve_from_rays(sim);
        for (std::size_t m = 0; m < term.values.size(); ++m) term.values[m] -= corr.values[m];
        double inc = term.norm2();
        growth_streak = (prev_inc > 0.0 && inc > 2.0 * prev_inc) ? growth_streak + 1 : 0;
        if (growth_streak >= 2)
            throw DivergenceDetected("traveltime neumann increments growing");
        prev_inc = inc;
        for (std::size_t m = 0; m < sum.values.size(); ++m) sum.values[m] += term.values[m];
    }
    return sum;
}

namespace {

bool entry_matches_disk(const LayerPartition& part, const Disk& disk, const PhasePoint& x0) {
    double depth = part.domain.depth(x0.x);
    double top = (disk.layer - 1) * part.thickness;
    // pool rays entering at this layer's top and at shallower tops: rays at
    // a single depth cannot split the correction between the disk's shell
    // and the one below, while shallower rays (already explained) pin the
    // shallow side of the tube
    if (depth > top + 0.25 * part.fine->spacing()) return false;
    const Vec3& dir = part.directions[disk.direction];
    double t = x0.x.dot(dir);
    if (t < disk.slab_lo - 1e-9 || t > disk.slab_hi + 1e-9) return false;
    // in-plane momentum for this direction
    return std::abs(x0.xi.dot(dir)) <= 1e-6 * x0.xi.norm() + 1e-12;
}

} // namespace

std::vector<Measurement> synth_measurements(const LayerPartition& part, const SpeedField& truth,
                                            int rays_per_disk, const TracerConfig& cfg,
                                            int max_layers) {
    TracerConfig fine_cfg = cfg;
    fine_cfg.step = cfg.step / 4.0; // model error instead of shared-discretization bias
    const int last = max_layers > 0 ? std::min(max_layers, part.k) : part.k;
    std::vector<Measurement> out;
    for (int layer = 1; layer <= last; ++layer) {
        for (const Disk& disk : part.layers[layer - 1]) {
            std::vector<PhasePoint> ics;
            try {
                ics = generate_initial_conditions(part, disk, truth, rays_per_disk, fine_cfg);
            } catch (const NoValidRays&) {
                continue;
            }
            for (const auto& x0 : ics) {
                Geodesic geo = trace(part.domain, truth, x0, fine_cfg);
                if (!geo.exited) continue;
                Measurement m;
                m.x0 = x0;
                m.t = geo.exit_time;
                m.exit_state << geo.samples.back().x, geo.samples.back().xi;
                out.push_back(std::move(m));
            }
        }
    }
    return out;
}

SpeedField metric_on_grid(const LayerPartition& part, const SpeedField& c) {
    const Grid& g = *part.fine;
    // extended: trial-metric flows run for the measured time and leave the box
    return c.resampled(g.origin(), Vec3::Constant(g.spacing()), g.dims()).extended();
}

MetricIterate solve_traveltime(const std::vector<Measurement>& measurements,
                               const SpeedField& g0, const LayerPartition& part,
                               const TraveltimeOptions& opt, TraveltimeReport* report,
                               const SpeedField* truth) {
    const Grid& fine = *part.fine;
    SpeedField current = (g0.is_gridded() ? g0 : metric_on_grid(part, g0)).extended();
    if (!(current.dims().array() == fine.dims().array()).all() ||
        (current.origin() - fine.origin()).norm() > 1e-12)
        throw GridMismatch("solve_traveltime: g0 not on the partition lattice");
    const double floor_value =
        opt.clamp_factor * *std::min_element(current.values().begin(), current.values().end());
    const double eps = opt.eps > 0.0 ? opt.eps : 0.5 * fine.spacing();
    const int last = opt.max_layers > 0 ? std::min(opt.max_layers, part.k) : part.k;

    if (report) report->layers.clear();
    int iteration = 0;

    for (int layer = 1; layer <= last; ++layer) {
        TraveltimeLayerReport lrep;
        lrep.layer = layer;
        lrep.disks = part.layers[layer - 1].size();

        for (int pass = 0; pass < std::max(1, opt.passes); ++pass) {
        // the report reflects the final pass over the layer
        lrep.rays_used = 0;
        lrep.rays_discarded = 0;
        lrep.disks_stalled = 0;
        lrep.disks_without_rays = 0;
        std::vector<double> sum(fine.size(), 0.0);
        std::vector<double> cnt(fine.size(), 0.0);

        for (const Disk& disk : part.layers[layer - 1]) {
            std::vector<const Measurement*> ms;
            for (const auto& m : measurements)
                if (entry_matches_disk(part, disk, m.x0)) ms.push_back(&m);
            if (ms.empty()) {
                ++lrep.disks_without_rays;
                continue;
            }

            SpeedField g_disk = current;
            std::vector<double> coverage(fine.size(), 0.0);
            for (int sweep = 0; sweep < opt.sweeps; ++sweep) {
                std::vector<LinearizedRay> rays;
                std::vector<Vec6> d;
                std::size_t discarded = 0;
                for (const Measurement* m : ms) {
                    MismatchResult mm = compute_mismatch(*m, g_disk, opt.tracer);
                    if (!geodesic_in_disk(part, disk, mm.geo)) {
                        ++discarded;
                        continue;
                    }
                    LinearizedRay row;
                    try {
                        // rows carry the rays' full trilinear support: a thin
                        // disk only sees part of each ray's sensitivity, and
                        // folding the rest onto disk-only unknowns inflates
                        // the update by the inverse of the disk's share
                        row = linearized_row(g_disk, mm.geo, mm.jac, fine);
                    } catch (const SingularJacobian&) {
                        ++discarded;
                        continue;
                    }
                    if (row.nodes.empty()) {
                        ++discarded;
                        continue;
                    }
                    rays.push_back(std::move(row));
                    d.push_back(mm.d);
                }
                std::vector<double> cov(fine.size(), 0.0);
                for (const auto& row : rays)
                    for (std::size_t c = 0; c < row.nodes.size(); ++c)
                        cov[row.nodes[c]] += row.coeffs[c].lpNorm<1>();
                if (sweep == 0) {
                    lrep.rays_used += rays.size();
                    lrep.rays_discarded += discarded;
                    coverage = cov;
                }
                if (rays.empty()) break;
                // solve and update on the whole tube of touched in-ball
                // nodes: a disk-only update leaves the neighbouring shells'
                // share of the mismatch unexplained, and repeated sweeps
                // then push the disk past the truth trying to cancel it
                // exterior nodes stay fixed (the metric is known outside the
                // ball), and so do shells already solved in earlier layers;
                // otherwise the smoothing term smears the correction onto
                // them and the deeper shells never receive their share
                std::vector<std::size_t> tube;
                std::vector<std::uint8_t> tmask(fine.size(), 0);
                for (const auto& row : rays)
                    for (std::size_t n : row.nodes)
                        if (!tmask[n] && fine.masked(n) &&
                            part.shell_of_node[n] >= layer) {
                            tmask[n] = 1;
                            tube.push_back(n);
                        }
                Region region = Region::make(part.fine->with_mask(std::move(tmask)), eps);
                std::vector<double> covpos;
                for (std::size_t n : tube)
                    if (cov[n] > 0.0) covpos.push_back(cov[n]);
                double cov_med = 0.0;
                if (!covpos.empty()) {
                    std::nth_element(covpos.begin(), covpos.begin() + covpos.size() / 2,
                                     covpos.end());
                    cov_med = covpos[covpos.size() / 2];
                }

                GridFunction lambda;
                try {
                    lambda = invert_update(rays, d, region, opt.N, opt.delta, opt.krylov);
                } catch (const NoConvergence&) {
                    // keep whatever earlier sweeps produced for this disk
                    ++lrep.disks_stalled;
                    break;
                } catch (const DivergenceDetected&) {
                    // near-converged disks trip the growth check on
                    // noise-level increments; keep the last good sweep
                    ++lrep.disks_stalled;
                    break;
                }
                const GridFunction& lam_fine = lambda;
                auto& vals = g_disk.mutable_values();
                for (std::size_t n : tube) {
                    // nodes grazed by a ray corner carry oscillatory
                    // least-squares noise; damp them by coverage share,
                    // and cap the per-sweep step relative to the iterate
                    double damp = cov_med > 0.0 ? cov[n] / (cov[n] + 0.5 * cov_med) : 0.0;
                    double cap = opt.trust_factor * vals[n];
                    double upd = std::min(std::max(opt.relax * damp * lam_fine[n], -cap), cap);
                    vals[n] = std::max(vals[n] + upd, floor_value);
                }
                ++iteration;
            }
            // overlap average weighted by ray sensitivity: an uncovered node
            // carries the unchanged iterate and would drag the mean back
            for (std::size_t n = 0; n < fine.size(); ++n) {
                if (coverage[n] <= 0.0 || !fine.masked(n)) continue;
                sum[n] += coverage[n] * g_disk.values()[n];
                cnt[n] += coverage[n];
            }
        }

        auto& vals = current.mutable_values();
        for (std::size_t n = 0; n < fine.size(); ++n)
            if (cnt[n] > 0) vals[n] = sum[n] / cnt[n];
        } // pass

        if (truth) {
            auto& vals = current.mutable_values();
            double num = 0.0, den = 0.0;
            for (std::size_t n = 0; n < fine.size(); ++n) {
                if (part.shell_of_node[n] != layer) continue;
                double tv = truth->is_gridded() ? truth->values()[n]
                                                : truth->value(fine.position(n));
                double dd = vals[n] - tv;
                num += dd * dd;
                den += tv * tv;
            }
            lrep.rel_error = den > 0.0 ? std::sqrt(num / den) : -1.0;
        }
        if (report) report->layers.push_back(lrep);
    }
    return {std::move(current), iteration};
}

} // namespace geoxray
