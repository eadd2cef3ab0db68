#ifndef GEOXRAY_SPEED_HPP
#define GEOXRAY_SPEED_HPP

#include "geoxray/types.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace geoxray {

// Isotropic sound speed c(x) > 0 defining the metric g_ij = delta_ij / c^2.
// Either a named analytic closure or a regular grid evaluated by trilinear
// interpolation. Immutable after construction.
class SpeedField {
public:
    static SpeedField constant(double c);
    // Known ids:
    //   "const"      params {c0}
    //   "affine"     params {a, bx, by, bz}        a + bx*x + by*y + bz*z
    //   "radial_cos" params {a, b, px, py, pz}     a + b*cos(|x - p|)
    //   "sin3"       params {a, b}                 a + b*sin(3 pi x) sin(pi y) sin(2 pi z)
    static SpeedField analytic(const std::string& id, std::vector<double> params);
    static SpeedField gridded(const Vec3& origin, const Vec3& spacing, const Idx3& dims,
                              std::vector<double> values);

    bool is_gridded() const { return gridded_; }

    double value(const Vec3& x) const;
    Vec3 gradient(const Vec3& x) const;
    Mat3 hessian(const Vec3& x) const;

    // Gridded accessors (throw if analytic).
    const Vec3& origin() const;
    const Vec3& spacing() const;
    const Idx3& dims() const;
    const std::vector<double>& values() const;
    std::vector<double>& mutable_values();
    const std::string& id() const { return id_; }
    const std::vector<double>& params() const { return params_; }

    // Samples an analytic field onto a grid (utility for tests and iterates).
    SpeedField resampled(const Vec3& origin, const Vec3& spacing, const Idx3& dims) const;

    // Copy with constant (clamped) extension outside the gridded extent in
    // place of the out-of-bounds error. Metric iterates need this: the flow
    // of a trial metric is run for the measured time and can leave the ball.
    SpeedField extended() const;

private:
    SpeedField() = default;

    double grid_value(const Vec3& x) const;
    void check_box(const Vec3& x) const;
    Vec3 clamp_to_box(const Vec3& x) const;

    bool gridded_ = false;
    bool extend_ = false;
    std::string id_;
    std::vector<double> params_;

    Vec3 origin_{0, 0, 0};
    Vec3 spacing_{1, 1, 1};
    Idx3 dims_{0, 0, 0};
    std::shared_ptr<std::vector<double>> grid_values_;
};

double speed_at(const SpeedField& field, const Vec3& x);
Vec3 grad_speed_at(const SpeedField& field, const Vec3& x);

// H(x, xi) = (c(x)^2 |xi|^2 - 1) / 2
double hamiltonian(const SpeedField& field, const PhasePoint& p);

// True iff x is on the boundary and c^2 (xi . nu) < 0 (strictly inward).
bool is_inflow(const Domain& domain, const SpeedField& field, const PhasePoint& p);

// Phase point at x with momentum along dir scaled so c|xi| = 1 (H = 0).
PhasePoint on_shell(const SpeedField& field, const Vec3& x, const Vec3& dir);

} // namespace geoxray

#endif
