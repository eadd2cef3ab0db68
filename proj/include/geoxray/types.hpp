#ifndef GEOXRAY_TYPES_HPP
#define GEOXRAY_TYPES_HPP

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

namespace geoxray {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Idx3 = Eigen::Vector3i;

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct OutOfBounds : Error { using Error::Error; };
struct NotOnBoundary : Error { using Error::Error; };
struct TrappedRay : Error { using Error::Error; };
struct EmptyGeodesic : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct NoConvergence : Error { using Error::Error; };
struct DivergenceDetected : Error { using Error::Error; };
struct EmptyLayer : Error { using Error::Error; };
struct NoValidRays : Error { using Error::Error; };
struct SingularJacobian : Error { using Error::Error; };
struct ZeroReference : Error { using Error::Error; };
struct IndexOutOfRange : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

// Ball domain. A point is interior iff |x - center| < radius.
struct Domain {
    Vec3 center{0.5, 0.5, 0.5};
    double radius{0.4};

    bool contains(const Vec3& x) const { return (x - center).norm() < radius; }
    // Radial depth below the boundary; 0 on the sphere, radius at the center.
    double depth(const Vec3& x) const { return radius - (x - center).norm(); }
    Vec3 outward_normal(const Vec3& x) const { return (x - center) / radius; }
    double boundary_tol() const { return 1e-9 * radius; }
    bool on_boundary(const Vec3& x) const {
        return std::abs((x - center).norm() - radius) <= boundary_tol();
    }
};

struct PhasePoint {
    Vec3 x;
    Vec3 xi;
};

inline constexpr double kTolHamiltonian = 1e-6;

} // namespace geoxray

#endif
