#include "geoxray/tracer.hpp"

#include <cmath>

namespace geoxray {

Vec6 ode_rhs(const SpeedField& field, const PhasePoint& p) {
    double c = field.value(p.x);
    Vec3 gc = field.gradient(p.x);
    Vec6 r;
    r.head<3>() = c * c * p.xi;
    r.tail<3>() = -c * p.xi.squaredNorm() * gc;
    return r;
}

Mat6 m_matrix(const SpeedField& field, const PhasePoint& p) {
    double c = field.value(p.x);
    Vec3 gc = field.gradient(p.x);
    Mat3 Hc = field.hessian(p.x);
    double xi2 = p.xi.squaredNorm();
    Mat6 M;
    M.topLeftCorner<3, 3>() = 2.0 * c * p.xi * gc.transpose();
    M.topRightCorner<3, 3>() = c * c * Mat3::Identity();
    M.bottomLeftCorner<3, 3>() = -(Hc * c + gc * gc.transpose()) * xi2;
    M.bottomRightCorner<3, 3>() = -2.0 * c * gc * p.xi.transpose();
    return M;
}

namespace {

struct FlowState {
    PhasePoint p;
    Mat6 J;
};

struct FlowDeriv {
    Vec6 v;
    Mat6 dJ;
};

FlowDeriv flow_rhs(const SpeedField& field, const FlowState& st, bool with_jacobian) {
    FlowDeriv d;
    d.v = ode_rhs(field, st.p);
    if (with_jacobian)
        d.dJ = m_matrix(field, st.p) * st.J;
    return d;
}

FlowState advance(const FlowState& st, const FlowDeriv& d, double h, bool with_jacobian) {
    FlowState out;
    out.p.x = st.p.x + h * d.v.head<3>();
    out.p.xi = st.p.xi + h * d.v.tail<3>();
    if (with_jacobian)
        out.J = st.J + h * d.dJ;
    else
        out.J = st.J;
    return out;
}

FlowState rk4_step(const SpeedField& field, const FlowState& st, double h, bool with_jacobian) {
    FlowDeriv k1 = flow_rhs(field, st, with_jacobian);
    FlowDeriv k2 = flow_rhs(field, advance(st, k1, 0.5 * h, with_jacobian), with_jacobian);
    FlowDeriv k3 = flow_rhs(field, advance(st, k2, 0.5 * h, with_jacobian), with_jacobian);
    FlowDeriv k4 = flow_rhs(field, advance(st, k3, h, with_jacobian), with_jacobian);
    FlowState out;
    out.p.x = st.p.x + (h / 6.0) * (k1.v.head<3>() + 2 * k2.v.head<3>() + 2 * k3.v.head<3>() +
                                    k4.v.head<3>());
    out.p.xi = st.p.xi + (h / 6.0) * (k1.v.tail<3>() + 2 * k2.v.tail<3>() + 2 * k3.v.tail<3>() +
                                      k4.v.tail<3>());
    if (with_jacobian)
        out.J = st.J + (h / 6.0) * (k1.dJ + 2 * k2.dJ + 2 * k3.dJ + k4.dJ);
    return out;
}

// Crossing parameter of the segment [a, b] with the sphere: exact root of the
// quadratic |a + theta (b - a) - center|^2 = radius^2 on (0, 1].
double crossing_parameter(const Domain& dom, const Vec3& a, const Vec3& b) {
    Vec3 d = b - a;
    Vec3 w = a - dom.center;
    double qa = d.squaredNorm();
    double qb = 2.0 * w.dot(d);
    double qc = w.squaredNorm() - dom.radius * dom.radius;
    if (qa == 0.0) return 1.0;
    double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) disc = 0.0;
    double theta = (-qb + std::sqrt(disc)) / (2.0 * qa);
    return std::min(std::max(theta, 0.0), 1.0);
}

std::pair<Geodesic, JacobianState> trace_impl(const Domain& domain, const SpeedField& field,
                                              const PhasePoint& x0, const TracerConfig& cfg,
                                              bool with_jacobian) {
    Geodesic geo;
    JacobianState jac;
    FlowState st{x0, Mat6::Identity()};
    double s = 0.0;
    geo.samples.push_back({s, st.p.x, st.p.xi});
    if (with_jacobian) jac.J.push_back(st.J);

    const int max_steps = cfg.resolved_max_steps(domain);
    for (int n = 0; n < max_steps; ++n) {
        FlowState next = rk4_step(field, st, cfg.step, with_jacobian);
        double s_next = s + cfg.step;
        if ((next.p.x - domain.center).norm() >= domain.radius) {
            // segment-sphere quadratic as the seed, then Newton on the radial
            // gap with partial RK4 steps so the exit keeps the scheme's order
            double theta = crossing_parameter(domain, st.p.x, next.p.x);
            FlowState ex = next;
            for (int it = 0; it < 8; ++it) {
                ex = rk4_step(field, st, theta * cfg.step, with_jacobian);
                Vec3 rv = ex.p.x - domain.center;
                double gap = rv.norm() - domain.radius;
                if (std::abs(gap) <= 0.1 * domain.boundary_tol()) break;
                double slope = rv.normalized().dot(ode_rhs(field, ex.p).head<3>()) * cfg.step;
                if (slope <= 0.0) break;
                theta = std::min(std::max(theta - gap / slope, 0.0), 1.0);
            }
            GeodesicSample exit;
            exit.s = s + theta * cfg.step;
            exit.x = ex.p.x;
            exit.xi = ex.p.xi;
            // snap onto the sphere to satisfy tol_bd
            Vec3 r = exit.x - domain.center;
            exit.x = domain.center + r * (domain.radius / r.norm());
            geo.samples.push_back(exit);
            if (with_jacobian) jac.J.push_back(ex.J);
            geo.exit_time = exit.s;
            geo.exited = true;
            return {std::move(geo), std::move(jac)};
        }
        st = next;
        s = s_next;
        geo.samples.push_back({s, st.p.x, st.p.xi});
        if (with_jacobian) jac.J.push_back(st.J);
    }
    geo.exited = false;
    geo.exit_time = s;
    return {std::move(geo), std::move(jac)};
}

} // namespace

Geodesic trace(const Domain& domain, const SpeedField& field, const PhasePoint& x0,
               const TracerConfig& cfg) {
    return trace_impl(domain, field, x0, cfg, false).first;
}

std::pair<Geodesic, JacobianState> trace_with_jacobian(const Domain& domain,
                                                       const SpeedField& field,
                                                       const PhasePoint& x0,
                                                       const TracerConfig& cfg) {
    return trace_impl(domain, field, x0, cfg, true);
}

std::pair<Geodesic, JacobianState> trace_to_time(const SpeedField& field, const PhasePoint& x0,
                                                 double t_end, const TracerConfig& cfg,
                                                 bool with_jacobian) {
    Geodesic geo;
    JacobianState jac;
    FlowState st{x0, Mat6::Identity()};
    double s = 0.0;
    geo.samples.push_back({s, st.p.x, st.p.xi});
    if (with_jacobian) jac.J.push_back(st.J);
    while (s < t_end - 1e-15 * std::max(1.0, t_end)) {
        double h = std::min(cfg.step, t_end - s);
        st = rk4_step(field, st, h, with_jacobian);
        s += h;
        geo.samples.push_back({s, st.p.x, st.p.xi});
        if (with_jacobian) jac.J.push_back(st.J);
    }
    geo.exit_time = s;
    geo.exited = true;
    return {std::move(geo), std::move(jac)};
}

} // namespace geoxray
