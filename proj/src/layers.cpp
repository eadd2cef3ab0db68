#include "geoxray/layers.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace geoxray {

namespace {

constexpr double kPi = 3.14159265358979323846;

double depth_tol(const LayerPartition& part) { return 0.25 * part.fine->spacing(); }
double slab_tol(const LayerPartition& part) { return 0.35 * part.fine->spacing(); }

double slab_origin(const LayerPartition& part, const Vec3& dir) {
    return part.domain.center.dot(dir) - part.domain.radius;
}

} // namespace

std::vector<Vec3> default_directions() {
    std::vector<Vec3> dirs = {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};
    for (double sx : {1.0, -1.0})
        for (double sy : {1.0, -1.0})
            dirs.push_back(Vec3(sx, sy, 1.0).normalized());
    return dirs;
}

LayerPartition build_partition(const Domain& domain, std::shared_ptr<const Grid> fine, int k,
                               std::vector<Vec3> directions, double slab_height) {
    if (k < 1) throw ConfigError("build_partition: k must be >= 1");
    if (directions.empty()) directions = default_directions();
    for (auto& d : directions) d.normalize();

    LayerPartition part;
    part.domain = domain;
    part.fine = fine->level() == GridLevel::fine ? fine : fine->with_level(GridLevel::fine);
    part.k = k;
    part.thickness = domain.radius / k;
    part.slab_height = slab_height > 0.0 ? slab_height : fine->spacing();
    part.directions = std::move(directions);

    part.shell_of_node.assign(part.fine->size(), -1);
    std::vector<std::size_t> shell_count(k, 0);
    for (std::size_t n = 0; n < part.fine->size(); ++n) {
        if (!part.fine->masked(n)) continue;
        int i = part.shell_at(part.fine->position(n));
        part.shell_of_node[n] = i;
        ++shell_count[i - 1];
    }
    for (int i = 1; i <= k; ++i)
        if (shell_count[i - 1] == 0)
            throw EmptyLayer("shell " + std::to_string(i) + " captured no grid nodes");

    part.layers.resize(k);
    const double H = part.slab_height;
    for (int d = 0; d < static_cast<int>(part.directions.size()); ++d) {
        const Vec3& dir = part.directions[d];
        double t0 = slab_origin(part, dir);
        int max_slab = std::max(0, static_cast<int>(std::ceil(2.0 * domain.radius / H)) - 1);
        std::map<std::pair<int, int>, Disk> disks; // (layer, slab) -> disk
        for (std::size_t n = 0; n < part.fine->size(); ++n) {
            int i = part.shell_of_node[n];
            if (i < 0) continue;
            double t = part.fine->position(n).dot(dir);
            int si = static_cast<int>(std::floor((t - t0) / H));
            si = std::min(std::max(si, 0), max_slab);
            Disk& disk = disks[{i, si}];
            if (disk.fine_nodes.empty()) {
                disk.layer = i;
                disk.direction = d;
                disk.slab = si;
                disk.slab_lo = t0 + si * H;
                disk.slab_hi = t0 + (si + 1) * H;
            }
            disk.fine_nodes.push_back(n);
        }
        for (auto& [key, disk] : disks)
            part.layers[key.first - 1].push_back(std::move(disk));
    }
    return part;
}

bool geodesic_in_disk(const LayerPartition& part, const Disk& disk, const Geodesic& geo) {
    const double td = depth_tol(part), ts = slab_tol(part);
    const double shell_top = (disk.layer - 1) * part.thickness;
    const double shell_bot = disk.layer * part.thickness;
    const Vec3& dir = part.directions[disk.direction];
    for (const auto& smp : geo.samples) {
        double d = part.domain.depth(smp.x);
        if (d > shell_bot + td) return false;
        if (d > shell_top - td) {
            double t = smp.x.dot(dir);
            if (t < disk.slab_lo - ts || t > disk.slab_hi + ts) return false;
        }
    }
    return true;
}

std::vector<PhasePoint> generate_initial_conditions(const LayerPartition& part, const Disk& disk,
                                                    const SpeedField& field, int count,
                                                    const TracerConfig& cfg) {
    if (count < 1) throw ConfigError("generate_initial_conditions: count must be >= 1");
    const Domain& dom = part.domain;
    const Vec3& dir = part.directions[disk.direction];
    const double r_entry = dom.radius - (disk.layer - 1) * part.thickness;
    const double r_bottom = dom.radius - disk.layer * part.thickness;

    const double mid = disk.slab_mid();
    const double z0 = mid - dom.center.dot(dir);
    const double rc2 = r_entry * r_entry - z0 * z0;
    const double h = part.fine->spacing();
    if (rc2 <= 0.01 * h * h) return {}; // slab misses the entry sphere
    const double rc = std::sqrt(rc2);
    const Vec3 ring_center = dom.center + z0 * dir;

    // shallowest closest-approach distance keeping a straight chord above the
    // shell bottom; curved rays are re-checked by the trace filter below
    double dmin = 0.0;
    if (r_bottom > 0.0 && r_bottom * r_bottom > z0 * z0)
        dmin = std::sqrt(r_bottom * r_bottom - z0 * z0);
    double phi_max = std::acos(std::min(1.0, dmin / rc));
    if (phi_max <= 0.0) return {};

    // orthonormal in-plane basis
    Vec3 e1 = dir.unitOrthogonal();
    Vec3 e2 = dir.cross(e1);

    int n_pos = std::max(4, static_cast<int>(std::lround(std::sqrt(2.0 * count))));
    int n_dir = std::max(1, count / n_pos);

    std::vector<PhasePoint> kept;
    for (int m = 0; m < n_pos; ++m) {
        double theta = 2.0 * kPi * m / n_pos;
        Vec3 p = ring_center + rc * (std::cos(theta) * e1 + std::sin(theta) * e2);
        for (int j = 1; j <= n_dir; ++j) {
            double phi = phi_max * j / n_dir;
            double sgn = ((m + j) % 2 == 0) ? 1.0 : -1.0;
            double theta2 = theta + sgn * 2.0 * phi;
            Vec3 q = ring_center + rc * (std::cos(theta2) * e1 + std::sin(theta2) * e2);
            Vec3 v = q - p;
            if (v.norm() < 1e-12) continue;
            PhasePoint pp = on_shell(field, p, v);
            Geodesic geo = trace(dom, field, pp, cfg);
            if (!geo.exited) continue;
            if (!geodesic_in_disk(part, disk, geo)) continue;
            kept.push_back(pp);
        }
    }
    if (kept.empty()) throw NoValidRays("no valid rays for disk (layer " +
                                        std::to_string(disk.layer) + ")");
    return kept;
}

namespace {

// Smallest plausible layer for a record plus a tolerance band; records that
// barely cross a shell line are offered to both neighbors.
std::vector<int> candidate_layers(const LayerPartition& part, double max_depth) {
    int i0 = std::min(part.k, static_cast<int>(std::floor(max_depth / part.thickness)) + 1);
    i0 = std::max(i0, 1);
    std::vector<int> out{i0};
    if (i0 > 1 && max_depth - (i0 - 1) * part.thickness <= depth_tol(part)) out.push_back(i0 - 1);
    return out;
}

} // namespace

GridFunction strip_reconstruct(const XRayDataSet& data, const LayerPartition& part,
                               const SpeedField& field, const StripOptions& opt,
                               StripReport* report, const GridFunction* truth) {
    const Grid& fine = *part.fine;
    auto coarse = part.fine->with_level(GridLevel::coarse);
    const double eps = opt.eps > 0.0 ? opt.eps : 0.5 * fine.spacing();
    const int last_layer = opt.max_layers > 0 ? std::min(opt.max_layers, part.k) : part.k;

    // candidate records per (layer, disk-in-layer)
    std::vector<std::vector<std::vector<int>>> assigned(part.k);
    for (int i = 0; i < part.k; ++i) assigned[i].resize(part.layers[i].size());
    std::size_t unassigned = 0;
    for (int r = 0; r < static_cast<int>(data.records.size()); ++r) {
        const auto& geo = data.records[r].geo;
        if (!geo.exited || geo.samples.size() < 2) {
            ++unassigned;
            continue;
        }
        double max_depth = 0.0;
        for (const auto& smp : geo.samples)
            max_depth = std::max(max_depth, part.domain.depth(smp.x));
        bool used = false;
        for (int layer : candidate_layers(part, max_depth)) {
            if (layer > last_layer) continue;
            auto& disks = part.layers[layer - 1];
            for (std::size_t di = 0; di < disks.size(); ++di) {
                if (!geodesic_in_disk(part, disks[di], geo)) continue;
                assigned[layer - 1][di].push_back(r);
                used = true;
            }
        }
        if (!used) ++unassigned;
    }

    GridFunction merged(coarse);
    std::vector<std::uint8_t> processed(fine.size(), 0);
    GridFunction known_fine(part.fine); // prolonged merged values on processed shells

    if (report) {
        report->layers.clear();
        report->records_unassigned = unassigned;
    }

    for (int layer = 1; layer <= last_layer; ++layer) {
        LayerReport lrep;
        lrep.layer = layer;
        lrep.disks = part.layers[layer - 1].size();

        std::vector<double> sum(fine.size(), 0.0);
        std::vector<int> cnt(fine.size(), 0);

        for (std::size_t di = 0; di < part.layers[layer - 1].size(); ++di) {
            const Disk& disk = part.layers[layer - 1][di];
            const auto& recs = assigned[layer - 1][di];
            if (recs.empty()) {
                ++lrep.disks_without_rays;
                continue;
            }
            lrep.records_used += recs.size();

            XRayDataSet sub;
            sub.provenance = data.provenance;
            sub.records.reserve(recs.size());
            for (int r : recs) {
                XRayRecord rec = data.records[r];
                if (layer > 1)
                    rec.value -= forward(known_fine, field, rec.geo);
                sub.records.push_back(std::move(rec));
            }

            std::vector<std::uint8_t> dmask(fine.size(), 0);
            for (std::size_t n : disk.fine_nodes) dmask[n] = 1;
            Region region = Region::make(part.fine->with_mask(std::move(dmask)), eps);
            NeumannResult res = reconstruct(sub, region, opt.N, opt.delta, field, nullptr,
                                            opt.krylov);
            for (std::size_t n : disk.fine_nodes) {
                if (!res.f.grid->active(n)) continue;
                sum[n] += res.f[n];
                ++cnt[n];
            }
        }

        for (std::size_t n = 0; n < fine.size(); ++n) {
            if (cnt[n] == 0) continue;
            merged[n] = sum[n] / cnt[n];
        }
        for (std::size_t n = 0; n < fine.size(); ++n)
            if (part.shell_of_node[n] == layer) processed[n] = 1;

        // refresh the known-region field for the outer-contribution subtraction
        auto proc_grid = part.fine->with_mask(std::vector<std::uint8_t>(processed));
        GridFunction proc_coarse(proc_grid->with_level(GridLevel::coarse));
        for (std::size_t n = 0; n < fine.size(); ++n)
            if (proc_coarse.grid->active(n)) proc_coarse[n] = merged[n];
        GridFunction prol = prolong_Pstar(proc_coarse);
        known_fine = GridFunction(part.fine);
        for (std::size_t n = 0; n < fine.size(); ++n)
            if (processed[n]) known_fine[n] = prol[n];

        if (truth) {
            double num = 0.0, den = 0.0;
            for (std::size_t n = 0; n < fine.size(); ++n) {
                if (!coarse->active(n) || part.shell_of_node[n] != layer) continue;
                double dd = merged[n] - (*truth)[n];
                num += dd * dd;
                den += (*truth)[n] * (*truth)[n];
            }
            lrep.rel_error = den > 0.0 ? std::sqrt(num / den) : -1.0;
        }
        if (report) report->layers.push_back(lrep);
    }
    return merged;
}

} // namespace geoxray
