#ifndef GEOXRAY_TRACER_HPP
#define GEOXRAY_TRACER_HPP

#include "geoxray/speed.hpp"
#include "geoxray/types.hpp"

#include <vector>

namespace geoxray {

struct TracerConfig {
    double step = 0.01;
    int max_steps = 0; // 0: 10 * (2 radius / step), set at trace time

    int resolved_max_steps(const Domain& domain) const {
        if (max_steps > 0) return max_steps;
        return static_cast<int>(10.0 * (2.0 * domain.radius / step)) + 1;
    }
};

struct GeodesicSample {
    double s;
    Vec3 x;
    Vec3 xi;
};

struct Geodesic {
    std::vector<GeodesicSample> samples;
    double exit_time = 0.0;
    bool exited = false;

    const GeodesicSample& front() const { return samples.front(); }
    const GeodesicSample& back() const { return samples.back(); }
};

// 6x6 flow Jacobian dX(s)/dX(0) at every sample; J[0] = identity.
struct JacobianState {
    std::vector<Mat6> J;
};

// Hamiltonian vector field V = (c^2 xi, -c grad(c) |xi|^2).
Vec6 ode_rhs(const SpeedField& field, const PhasePoint& p);

// Variational matrix M with dJ/ds = M J for the isotropic Hamiltonian.
Mat6 m_matrix(const SpeedField& field, const PhasePoint& p);

// RK4 until the position leaves the ball; the last sample is placed on the
// boundary sphere. exited=false if max_steps ran out first (trapped ray).
Geodesic trace(const Domain& domain, const SpeedField& field, const PhasePoint& x0,
               const TracerConfig& cfg);

std::pair<Geodesic, JacobianState> trace_with_jacobian(const Domain& domain,
                                                       const SpeedField& field,
                                                       const PhasePoint& x0,
                                                       const TracerConfig& cfg);

// RK4 up to the fixed time t_end regardless of the domain boundary (used to
// evaluate the flow at a measured exit time under a trial metric).
std::pair<Geodesic, JacobianState> trace_to_time(const SpeedField& field, const PhasePoint& x0,
                                                 double t_end, const TracerConfig& cfg,
                                                 bool with_jacobian);

} // namespace geoxray

#endif
