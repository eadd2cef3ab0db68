#include "geoxray/xray.hpp"

#include <cmath>

namespace geoxray {

GeodesicIndex::GeodesicIndex(std::shared_ptr<const Grid> grid,
                             const std::vector<XRayRecord>& records, double eps)
    : grid_(std::move(grid)), eps_(eps), buckets_(grid_->size()) {
    const Grid& g = *grid_;
    double h = g.spacing();
    int reach = static_cast<int>(std::ceil(eps / h));
    std::vector<int> last_hit(g.size(), -1); // dedupe within one record
    for (int r = 0; r < static_cast<int>(records.size()); ++r) {
        for (const auto& smp : records[r].geo.samples) {
            Vec3 u = (smp.x - g.origin()) / h;
            for (int dk = -reach; dk <= reach + 1; ++dk)
                for (int dj = -reach; dj <= reach + 1; ++dj)
                    for (int di = -reach; di <= reach + 1; ++di) {
                        int i = static_cast<int>(std::floor(u[0])) + di;
                        int j = static_cast<int>(std::floor(u[1])) + dj;
                        int k = static_cast<int>(std::floor(u[2])) + dk;
                        if (i < 0 || j < 0 || k < 0 || i >= g.dims()[0] || j >= g.dims()[1] ||
                            k >= g.dims()[2])
                            continue;
                        std::size_t n = g.index(i, j, k);
                        if (!g.active(n)) continue;
                        if (last_hit[n] == r) continue;
                        if ((g.position(n) - smp.x).norm() > eps) continue;
                        last_hit[n] = r;
                        buckets_[n].push_back(r);
                    }
        }
    }
}

double GeodesicIndex::coverage() const {
    std::size_t active = 0, covered = 0;
    for (std::size_t n = 0; n < grid_->size(); ++n) {
        if (!grid_->active(n)) continue;
        ++active;
        if (!buckets_[n].empty()) ++covered;
    }
    return active ? double(covered) / double(active) : 1.0;
}

double phase_speed(const SpeedField& field, const GeodesicSample& smp) {
    double c = field.value(smp.x);
    return c * c * smp.xi.norm();
}

double forward(const GridFunction& f, const SpeedField& field, const Geodesic& geo) {
    if (geo.samples.size() < 2)
        throw EmptyGeodesic("forward: geodesic has fewer than 2 samples");
    double sum = 0.0;
    double prev = interpolate(f, geo.samples[0].x) * phase_speed(field, geo.samples[0]);
    for (std::size_t i = 1; i < geo.samples.size(); ++i) {
        double cur = interpolate(f, geo.samples[i].x) * phase_speed(field, geo.samples[i]);
        sum += 0.5 * (prev + cur) * (geo.samples[i].s - geo.samples[i - 1].s);
        prev = cur;
    }
    return sum;
}

GridFunction backproject_values(const std::vector<double>& values, const GeodesicIndex& idx,
                                std::shared_ptr<const Grid> grid, std::size_t* empty_nodes) {
    if (!grid->same_lattice(idx.grid()))
        throw GridMismatch("backproject: index built on a different lattice");
    GridFunction out(grid);
    std::size_t empty = 0;
    for (std::size_t n = 0; n < grid->size(); ++n) {
        if (!grid->active(n)) continue;
        const auto& b = idx.bucket(n);
        if (b.empty()) {
            ++empty;
            continue;
        }
        double s = 0.0;
        for (int r : b) s += values[r];
        out[n] = s / double(b.size());
    }
    if (empty_nodes) *empty_nodes = empty;
    return out;
}

GridFunction backproject(const XRayDataSet& data, const GeodesicIndex& idx,
                         std::shared_ptr<const Grid> grid, std::size_t* empty_nodes) {
    std::vector<double> vals(data.records.size());
    for (std::size_t r = 0; r < vals.size(); ++r) vals[r] = data.records[r].value;
    return backproject_values(vals, idx, std::move(grid), empty_nodes);
}

Eigen::VectorXd ForwardMatrix::to_vector(const GridFunction& f) const {
    Eigen::VectorXd v(active.size());
    for (std::size_t c = 0; c < active.size(); ++c) v[c] = f[active[c]];
    return v;
}

GridFunction ForwardMatrix::to_function(const Eigen::VectorXd& v) const {
    GridFunction f(grid);
    for (std::size_t c = 0; c < active.size(); ++c) f[active[c]] = v[c];
    return f;
}

ForwardMatrix assemble_forward_matrix(std::shared_ptr<const Grid> fine, const SpeedField& field,
                                      const std::vector<XRayRecord>& records) {
    if (fine->level() != GridLevel::fine)
        throw GridMismatch("assemble_forward_matrix expects the fine grid");
    ForwardMatrix fm;
    fm.grid = fine;
    fm.active = fine->active_nodes();
    fm.compact.assign(fine->size(), -1);
    for (std::size_t c = 0; c < fm.active.size(); ++c) fm.compact[fm.active[c]] = int(c);

    std::vector<Eigen::Triplet<double>> trips;
    CellWeights cw;
    for (int r = 0; r < static_cast<int>(records.size()); ++r) {
        const auto& geo = records[r].geo;
        if (geo.samples.size() < 2) continue;
        for (std::size_t i = 0; i < geo.samples.size(); ++i) {
            double ds = 0.0;
            if (i > 0) ds += 0.5 * (geo.samples[i].s - geo.samples[i - 1].s);
            if (i + 1 < geo.samples.size()) ds += 0.5 * (geo.samples[i + 1].s - geo.samples[i].s);
            double w = ds * phase_speed(field, geo.samples[i]);
            if (!cell_weights(*fine, geo.samples[i].x, cw)) continue;
            for (int c = 0; c < cw.count; ++c) {
                int col = fm.compact[cw.node[c]];
                if (col < 0) continue;
                trips.emplace_back(r, col, w * cw.w[c]);
            }
        }
    }
    fm.A.resize(static_cast<int>(records.size()), static_cast<int>(fm.active.size()));
    fm.A.setFromTriplets(trips.begin(), trips.end());
    return fm;
}

} // namespace geoxray
