#ifndef GEOXRAY_LAYERS_HPP
#define GEOXRAY_LAYERS_HPP

#include "geoxray/neumann.hpp"

namespace geoxray {

// Slab-shaped sub-domain of one spherical shell, one grid cell high.
struct Disk {
    int layer = 0;     // 1-based shell index, outermost first
    int direction = 0; // index into LayerPartition::directions
    int slab = 0;
    double slab_lo = 0.0, slab_hi = 0.0; // bounds of x . d
    std::vector<std::size_t> fine_nodes;

    double slab_mid() const { return 0.5 * (slab_lo + slab_hi); }
};

// Shells of the radial depth function rho(x) = radius - |x - center|, each
// sliced into height-h slabs along several directions.
struct LayerPartition {
    Domain domain;
    std::shared_ptr<const Grid> fine;
    int k = 1;
    double thickness = 0.0; // radius / k
    double slab_height = 0.0;
    std::vector<Vec3> directions;
    std::vector<int> shell_of_node;        // -1 outside the mask
    std::vector<std::vector<Disk>> layers; // [i-1] -> disks of shell i

    // Deepest shell whose closure contains x (1-based).
    int shell_at(const Vec3& x) const {
        double d = domain.depth(x);
        int i = static_cast<int>(std::floor(d / thickness)) + 1;
        return std::min(std::max(i, 1), k);
    }
};

// 3 coordinate axes plus the 4 body diagonals.
std::vector<Vec3> default_directions();

// slab_height <= 0 selects the grid spacing; a slab height covering the
// whole ball yields one disk per shell and direction.
LayerPartition build_partition(const Domain& domain, std::shared_ptr<const Grid> fine, int k,
                               std::vector<Vec3> directions, double slab_height = -1.0);

// Inflow states on the circle where the disk mid-plane meets the shell's
// outer sphere, with in-plane chord directions shallow enough to stay above
// the shell bottom; candidates whose traced geodesic leaves the union of the
// outer shells and the disk slab are discarded.
std::vector<PhasePoint> generate_initial_conditions(const LayerPartition& part, const Disk& disk,
                                                    const SpeedField& field, int count,
                                                    const TracerConfig& cfg);

// True iff the traced geodesic stays within shells 1..layer-1 plus the disk.
bool geodesic_in_disk(const LayerPartition& part, const Disk& disk, const Geodesic& geo);

struct StripOptions {
    int N = 4;
    double delta = 0.2;
    double eps = -1.0; // default h/2
    TracerConfig tracer;
    KrylovOptions krylov;
    int max_layers = 0; // 0: all
};

struct LayerReport {
    int layer = 0;
    std::size_t disks = 0;
    std::size_t disks_without_rays = 0;
    std::size_t records_used = 0;
    double rel_error = -1.0; // vs truth when supplied
};

struct StripReport {
    std::vector<LayerReport> layers;
    std::size_t records_unassigned = 0;
};

// Outer-to-inner reconstruction: per disk, subtract the forward contribution
// of the already reconstructed region from each datum, run the Neumann
// reconstructor on the disk nodes, then average overlapping disks per layer.
GridFunction strip_reconstruct(const XRayDataSet& data, const LayerPartition& part,
                               const SpeedField& field, const StripOptions& opt,
                               StripReport* report = nullptr,
                               const GridFunction* truth = nullptr);

} // namespace geoxray

#endif
