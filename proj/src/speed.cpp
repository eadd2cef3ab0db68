#include "geoxray/speed.hpp"

#include <cmath>

namespace geoxray {

namespace {

constexpr double kPi = 3.14159265358979323846;

void check_positive(double c, const std::string& what) {
    if (!(c > 0.0))
        throw ConfigError("speed field not strictly positive: " + what);
}

} // namespace

SpeedField SpeedField::constant(double c) {
    return analytic("const", {c});
}

SpeedField SpeedField::analytic(const std::string& id, std::vector<double> params) {
    SpeedField f;
    f.gridded_ = false;
    f.id_ = id;
    f.params_ = std::move(params);
    auto need = [&](size_t n) {
        if (f.params_.size() != n)
            throw ConfigError("analytic speed '" + id + "' expects " + std::to_string(n) +
                              " parameters, got " + std::to_string(f.params_.size()));
    };
    if (id == "const") {
        need(1);
        check_positive(f.params_[0], "const");
    } else if (id == "affine") {
        need(4);
        check_positive(f.params_[0], "affine base value");
    } else if (id == "radial_cos") {
        need(5);
        check_positive(f.params_[0] - std::abs(f.params_[1]), "radial_cos lower bound");
    } else if (id == "sin3") {
        need(2);
        check_positive(f.params_[0] - std::abs(f.params_[1]), "sin3 lower bound");
    } else {
        throw ConfigError("unknown analytic speed id '" + id + "'");
    }
    return f;
}

SpeedField SpeedField::gridded(const Vec3& origin, const Vec3& spacing, const Idx3& dims,
                               std::vector<double> values) {
    if (dims.minCoeff() < 2)
        throw ConfigError("gridded speed needs at least 2 nodes per axis");
    if (static_cast<long>(values.size()) != long(dims[0]) * dims[1] * dims[2])
        throw ConfigError("gridded speed value count does not match dims");
    for (double v : values)
        check_positive(v, "grid node");
    SpeedField f;
    f.gridded_ = true;
    f.id_ = "gridded";
    f.origin_ = origin;
    f.spacing_ = spacing;
    f.dims_ = dims;
    f.grid_values_ = std::make_shared<std::vector<double>>(std::move(values));
    return f;
}

const Vec3& SpeedField::origin() const {
    if (!gridded_) throw ConfigError("origin(): field is analytic");
    return origin_;
}
const Vec3& SpeedField::spacing() const {
    if (!gridded_) throw ConfigError("spacing(): field is analytic");
    return spacing_;
}
const Idx3& SpeedField::dims() const {
    if (!gridded_) throw ConfigError("dims(): field is analytic");
    return dims_;
}
const std::vector<double>& SpeedField::values() const {
    if (!gridded_) throw ConfigError("values(): field is analytic");
    return *grid_values_;
}
std::vector<double>& SpeedField::mutable_values() {
    if (!gridded_) throw ConfigError("values(): field is analytic");
    if (grid_values_.use_count() > 1)
        grid_values_ = std::make_shared<std::vector<double>>(*grid_values_);
    return *grid_values_;
}

SpeedField SpeedField::extended() const {
    SpeedField f = *this;
    f.extend_ = true;
    return f;
}

void SpeedField::check_box(const Vec3& x) const {
    if (extend_) return;
    for (int k = 0; k < 3; ++k) {
        double hi = origin_[k] + spacing_[k] * (dims_[k] - 1);
        // one-cell guard band: integrator stage points can overshoot the
        // domain by a fraction of a step near the box faces; such queries are
        // clamped (constant extension), anything further out is a real error
        double slack = spacing_[k];
        if (x[k] < origin_[k] - slack || x[k] > hi + slack)
            throw OutOfBounds("query outside gridded speed extent");
    }
}

Vec3 SpeedField::clamp_to_box(const Vec3& x) const {
    Vec3 y = x;
    for (int k = 0; k < 3; ++k) {
        double hi = origin_[k] + spacing_[k] * (dims_[k] - 1);
        y[k] = std::min(std::max(y[k], origin_[k]), hi);
    }
    return y;
}

double SpeedField::grid_value(const Vec3& x) const {
    const auto& v = *grid_values_;
    int i[3];
    double t[3];
    for (int k = 0; k < 3; ++k) {
        double u = (x[k] - origin_[k]) / spacing_[k];
        int c = static_cast<int>(std::floor(u));
        c = std::min(std::max(c, 0), dims_[k] - 2);
        i[k] = c;
        t[k] = u - c;
        t[k] = std::min(std::max(t[k], 0.0), 1.0);
    }
    auto at = [&](int a, int b, int c) {
        return v[(i[0] + a) + dims_[0] * ((i[1] + b) + std::ptrdiff_t(dims_[1]) * (i[2] + c))];
    };
    double c00 = at(0, 0, 0) * (1 - t[0]) + at(1, 0, 0) * t[0];
    double c10 = at(0, 1, 0) * (1 - t[0]) + at(1, 1, 0) * t[0];
    double c01 = at(0, 0, 1) * (1 - t[0]) + at(1, 0, 1) * t[0];
    double c11 = at(0, 1, 1) * (1 - t[0]) + at(1, 1, 1) * t[0];
    double c0 = c00 * (1 - t[1]) + c10 * t[1];
    double c1 = c01 * (1 - t[1]) + c11 * t[1];
    return c0 * (1 - t[2]) + c1 * t[2];
}

double SpeedField::value(const Vec3& x) const {
    if (gridded_) {
        check_box(x);
        return grid_value(x);
    }
    const auto& p = params_;
    if (id_ == "const") return p[0];
    if (id_ == "affine") return p[0] + p[1] * x[0] + p[2] * x[1] + p[3] * x[2];
    if (id_ == "radial_cos") {
        Vec3 d = x - Vec3(p[2], p[3], p[4]);
        return p[0] + p[1] * std::cos(d.norm());
    }
    // sin3
    return p[0] + p[1] * std::sin(3 * kPi * x[0]) * std::sin(kPi * x[1]) * std::sin(2 * kPi * x[2]);
}

Vec3 SpeedField::gradient(const Vec3& x) const {
    if (gridded_) {
        check_box(x);
        // central differences of the interpolant, step = grid spacing;
        // stencil points clamped to the box near the faces
        Vec3 g;
        for (int k = 0; k < 3; ++k) {
            double h = spacing_[k];
            Vec3 xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            xp = clamp_to_box(xp);
            xm = clamp_to_box(xm);
            // degenerate stencil only happens under constant extension
            g[k] = xp[k] > xm[k] ? (grid_value(xp) - grid_value(xm)) / (xp[k] - xm[k]) : 0.0;
        }
        return g;
    }
    const auto& p = params_;
    if (id_ == "const") return Vec3::Zero();
    if (id_ == "affine") return Vec3(p[1], p[2], p[3]);
    if (id_ == "radial_cos") {
        Vec3 d = x - Vec3(p[2], p[3], p[4]);
        double r = d.norm();
        if (r < 1e-14) return Vec3::Zero();
        return (-p[1] * std::sin(r) / r) * d;
    }
    double sx = std::sin(3 * kPi * x[0]), cx = std::cos(3 * kPi * x[0]);
    double sy = std::sin(kPi * x[1]), cy = std::cos(kPi * x[1]);
    double sz = std::sin(2 * kPi * x[2]), cz = std::cos(2 * kPi * x[2]);
    return p[1] * Vec3(3 * kPi * cx * sy * sz, kPi * sx * cy * sz, 2 * kPi * sx * sy * cz);
}

Mat3 SpeedField::hessian(const Vec3& x_in) const {
    const Vec3& x = x_in;
    if (gridded_) {
        check_box(x_in);
        // under constant extension the stencil spacings go degenerate outside
        // the box, so probe from just inside the nearest box point
        Vec3 xq = x_in;
        if (extend_) {
            for (int k = 0; k < 3; ++k) {
                double lo = origin_[k] + 1e-9 * spacing_[k];
                double hi = origin_[k] + spacing_[k] * (dims_[k] - 1) - 1e-9 * spacing_[k];
                xq[k] = std::min(std::max(xq[k], lo), hi);
            }
        }
        Mat3 H;
        double c0 = grid_value(xq);
        for (int k = 0; k < 3; ++k) {
            double h = spacing_[k];
            Vec3 xp = clamp_to_box(xq + h * Vec3::Unit(k));
            Vec3 xm = clamp_to_box(xq - h * Vec3::Unit(k));
            double hp = xp[k] - xq[k], hm = xq[k] - xm[k];
            H(k, k) = 2.0 * (hm * grid_value(xp) - (hp + hm) * c0 + hp * grid_value(xm)) /
                      (hp * hm * (hp + hm));
        }
        for (int a = 0; a < 3; ++a)
            for (int b = a + 1; b < 3; ++b) {
                double ha = spacing_[a], hb = spacing_[b];
                Vec3 xpp = clamp_to_box(xq + ha * Vec3::Unit(a) + hb * Vec3::Unit(b));
                Vec3 xpm = clamp_to_box(xq + ha * Vec3::Unit(a) - hb * Vec3::Unit(b));
                Vec3 xmp = clamp_to_box(xq - ha * Vec3::Unit(a) + hb * Vec3::Unit(b));
                Vec3 xmm = clamp_to_box(xq - ha * Vec3::Unit(a) - hb * Vec3::Unit(b));
                double da = 0.5 * ((xpp[a] - xmp[a]) + (xpm[a] - xmm[a]));
                double db = 0.5 * ((xpp[b] - xpm[b]) + (xmp[b] - xmm[b]));
                H(a, b) = H(b, a) =
                    (grid_value(xpp) - grid_value(xpm) - grid_value(xmp) + grid_value(xmm)) /
                    (da * db);
            }
        return H;
    }
    const auto& p = params_;
    if (id_ == "const" || id_ == "affine") return Mat3::Zero();
    if (id_ == "radial_cos") {
        Vec3 d = x - Vec3(p[2], p[3], p[4]);
        double r = d.norm();
        if (r < 1e-10) return -p[1] * Mat3::Identity();
        Vec3 u = d / r;
        Mat3 uu = u * u.transpose();
        return -p[1] * (std::cos(r) * uu + std::sin(r) / r * (Mat3::Identity() - uu));
    }
    double sx = std::sin(3 * kPi * x[0]), cx = std::cos(3 * kPi * x[0]);
    double sy = std::sin(kPi * x[1]), cy = std::cos(kPi * x[1]);
    double sz = std::sin(2 * kPi * x[2]), cz = std::cos(2 * kPi * x[2]);
    Mat3 H;
    H(0, 0) = -9 * kPi * kPi * sx * sy * sz;
    H(1, 1) = -kPi * kPi * sx * sy * sz;
    H(2, 2) = -4 * kPi * kPi * sx * sy * sz;
    H(0, 1) = H(1, 0) = 3 * kPi * kPi * cx * cy * sz;
    H(0, 2) = H(2, 0) = 6 * kPi * kPi * cx * sy * cz;
    H(1, 2) = H(2, 1) = 2 * kPi * kPi * sx * cy * cz;
    return p[1] * H;
}

SpeedField SpeedField::resampled(const Vec3& origin, const Vec3& spacing, const Idx3& dims) const {
    std::vector<double> vals(std::size_t(dims[0]) * dims[1] * dims[2]);
    std::size_t n = 0;
    for (int k = 0; k < dims[2]; ++k)
        for (int j = 0; j < dims[1]; ++j)
            for (int i = 0; i < dims[0]; ++i)
                vals[n++] = value(origin + Vec3(i * spacing[0], j * spacing[1], k * spacing[2]));
    return gridded(origin, spacing, dims, std::move(vals));
}

double speed_at(const SpeedField& field, const Vec3& x) { return field.value(x); }
Vec3 grad_speed_at(const SpeedField& field, const Vec3& x) { return field.gradient(x); }

double hamiltonian(const SpeedField& field, const PhasePoint& p) {
    double c = field.value(p.x);
    return 0.5 * (c * c * p.xi.squaredNorm() - 1.0);
}

bool is_inflow(const Domain& domain, const SpeedField& field, const PhasePoint& p) {
    if (!domain.on_boundary(p.x))
        throw NotOnBoundary("is_inflow: point not on the boundary sphere");
    double c = field.value(p.x);
    return c * c * p.xi.dot(domain.outward_normal(p.x)) < 0.0;
}

PhasePoint on_shell(const SpeedField& field, const Vec3& x, const Vec3& dir) {
    double n = dir.norm();
    if (n == 0.0) throw ConfigError("on_shell: zero direction");
    double c = field.value(x);
    return {x, dir / (n * c)};
}

} // namespace geoxray
