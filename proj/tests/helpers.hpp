#ifndef GEOXRAY_TEST_HELPERS_HPP
#define GEOXRAY_TEST_HELPERS_HPP

#include "geoxray/xray.hpp"

#include <cmath>
#include <functional>
#include <random>

namespace geoxray::testing {

inline Domain ball() { return Domain{Vec3(0.5, 0.5, 0.5), 0.4}; }

// Axis-parallel chords through an n x n lateral lattice per axis, traced
// under `field`; values filled by `integrand` with a fine trapezoid rule on
// the traced samples (the data oracle) when given, else left at zero.
inline XRayDataSet axis_chords(const Domain& dom, const SpeedField& field, int n,
                               const TracerConfig& cfg,
                               const std::function<double(const Vec3&)>& integrand = {}) {
    XRayDataSet data;
    const double r = dom.radius;
    for (int axis = 0; axis < 3; ++axis) {
        int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                Vec3 pos = dom.center;
                pos[a1] += -0.9 * r + 1.8 * r * (i + 0.5) / n;
                pos[a2] += -0.9 * r + 1.8 * r * (j + 0.5) / n;
                double d2 = (pos - dom.center).squaredNorm();
                if (d2 > 0.9 * r * r) continue;
                pos[axis] = dom.center[axis] - std::sqrt(r * r - d2);
                Vec3 dir = Vec3::Zero();
                dir[axis] = 1.0;
                XRayRecord rec;
                rec.x0 = on_shell(field, pos, dir);
                rec.geo = trace(dom, field, rec.x0, cfg);
                if (!rec.geo.exited || rec.geo.samples.size() < 2) continue;
                if (integrand) {
                    double v = 0.0;
                    const auto& smp = rec.geo.samples;
                    for (std::size_t s = 0; s + 1 < smp.size(); ++s) {
                        double a = integrand(smp[s].x) * phase_speed(field, smp[s]);
                        double b = integrand(smp[s + 1].x) * phase_speed(field, smp[s + 1]);
                        v += 0.5 * (a + b) * (smp[s + 1].s - smp[s].s);
                    }
                    rec.value = v;
                }
                data.records.push_back(std::move(rec));
            }
        }
    }
    return data;
}

inline PhasePoint random_inflow(const Domain& dom, const SpeedField& field, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (;;) {
        Vec3 p(uni(rng), uni(rng), uni(rng));
        if (p.norm() < 1e-6 || p.norm() > 1.0) continue;
        p = dom.center + dom.radius * p.normalized();
        Vec3 d(uni(rng), uni(rng), uni(rng));
        if (d.norm() < 1e-6) continue;
        d.normalize();
        if (d.dot(dom.outward_normal(p)) > -0.2) continue; // avoid grazing entries
        return on_shell(field, p, d);
    }
}

} // namespace geoxray::testing

#endif
