#ifndef GEOXRAY_TRAVELTIME_HPP
#define GEOXRAY_TRAVELTIME_HPP

#include "geoxray/layers.hpp"

namespace geoxray {

// Boundary scattering datum: entry state, measured exit state and exit time.
struct Measurement {
    PhasePoint x0;
    Vec6 exit_state;
    double t = 0.0;
};

// Derivative of the Hamiltonian vector field with respect to the speed,
// evaluated at a perturbation lambda given on the fine grid:
//   dV(lambda) = (2 c lambda xi, -(grad(c) lambda + c grad(lambda)) |xi|^2)
Vec6 dgV(const SpeedField& field, const GridFunction& lambda, const PhasePoint& p);

struct MismatchResult {
    Vec6 d;
    Geodesic geo;
    JacobianState jac;
};

// Traces under the trial metric up to the measured exit time and returns the
// 6-vector state difference plus the trace and Jacobian for reuse.
MismatchResult compute_mismatch(const Measurement& m, const SpeedField& trial,
                                const TracerConfig& cfg);

// Sparse row-block of the linearized transform along one geodesic: maps
// grid values of lambda in the ray tube to a 6-vector (and transposes back).
struct LinearizedRay {
    std::vector<std::size_t> nodes; // lattice node ids
    std::vector<Vec6> coeffs;

    Vec6 apply(const GridFunction& lambda) const;
    void add_transpose(const Vec6& w, GridFunction& out) const;
};

LinearizedRay linearized_row(const SpeedField& trial, const Geodesic& geo,
                             const JacobianState& jac, const Grid& fine,
                             double cond_cap = 1e12);

// One linearized inversion: regularized normal solve over the stacked ray
// blocks plus the truncated Neumann correction; returns the coarse update.
GridFunction invert_update(const std::vector<LinearizedRay>& rays, const std::vector<Vec6>& d,
                           const Region& region, int N, double delta,
                           const KrylovOptions& krylov = {});

struct MetricIterate {
    SpeedField c;
    int iteration = 0;
};

struct TraveltimeOptions {
    int sweeps = 5;
    // averaged passes over each layer: sweeping one disk for long overfits
    // its few rays, so alternate short per-disk runs with overlap averaging
    int passes = 1;
    int N = 4;
    double delta = 0.02;
    double eps = -1.0;
    TracerConfig tracer;
    KrylovOptions krylov;
    int max_layers = 0;
    double clamp_factor = 1e-3; // positivity floor relative to min of g0
    double trust_factor = 0.1;  // per-sweep update cap relative to the iterate
    // thin disks see only part of each ray's trilinear support, so the
    // disk-restricted solve over-attributes the mismatch; damp the update
    double relax = 0.5;
};

struct TraveltimeLayerReport {
    int layer = 0;
    std::size_t disks = 0;
    std::size_t disks_without_rays = 0;
    std::size_t disks_stalled = 0;
    std::size_t rays_used = 0;
    std::size_t rays_discarded = 0;
    double rel_error = -1.0;
};

struct TraveltimeReport {
    std::vector<TraveltimeLayerReport> layers;
};

// Layer-stripping traveltime solver: per disk, `sweeps` rounds of
// mismatch -> linearized inversion -> metric update; disks of a layer are
// averaged on overlaps before moving inward. g0 must be gridded on the
// partition lattice, and must equal the true speed outside the ball: the
// identity assumes a known exterior, and an exterior error leaves a
// mismatch component that no in-ball update can explain.
MetricIterate solve_traveltime(const std::vector<Measurement>& measurements,
                               const SpeedField& g0, const LayerPartition& part,
                               const TraveltimeOptions& opt, TraveltimeReport* report = nullptr,
                               const SpeedField* truth = nullptr);

// Synthetic scattering data: inflow states from the partition's disks traced
// under the true metric with a finer step (step/4).
std::vector<Measurement> synth_measurements(const LayerPartition& part, const SpeedField& truth,
                                            int rays_per_disk, const TracerConfig& cfg,
                                            int max_layers = 0);

// Gridded copy of a speed field on the partition lattice.
SpeedField metric_on_grid(const LayerPartition& part, const SpeedField& c);

} // namespace geoxray

#endif
