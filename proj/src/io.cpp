#include "geoxray/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <random>
#include <sstream>

namespace geoxray {

namespace {

constexpr double kPi = 3.14159265358979323846;

void fail_io(const std::string& what) { throw IoError(what); }

std::ofstream open_out(const std::string& path, bool binary) {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) fail_io("cannot open for writing: " + path);
    os << std::setprecision(17);
    return os;
}

std::ifstream open_in(const std::string& path, bool binary) {
    std::ifstream is(path, binary ? std::ios::binary : std::ios::in);
    if (!is) fail_io("cannot open for reading: " + path);
    return is;
}

void write_header(std::ostream& os, const Idx3& dims, const Vec3& origin, const Vec3& spacing) {
    os << dims[0] << ' ' << dims[1] << ' ' << dims[2] << '\n';
    os << origin[0] << ' ' << origin[1] << ' ' << origin[2] << '\n';
    os << spacing[0] << ' ' << spacing[1] << ' ' << spacing[2] << '\n';
}

void read_header(std::istream& is, Idx3& dims, Vec3& origin, Vec3& spacing,
                 const std::string& path) {
    std::string l1, l2, l3;
    if (!std::getline(is, l1) || !std::getline(is, l2) || !std::getline(is, l3))
        fail_io("truncated header: " + path);
    std::istringstream s1(l1), s2(l2), s3(l3);
    if (!(s1 >> dims[0] >> dims[1] >> dims[2]) ||
        !(s2 >> origin[0] >> origin[1] >> origin[2]) ||
        !(s3 >> spacing[0] >> spacing[1] >> spacing[2]))
        fail_io("malformed header: " + path);
    if (dims[0] < 2 || dims[1] < 2 || dims[2] < 2) fail_io("degenerate dims: " + path);
}

void write_doubles(std::ostream& os, const std::vector<double>& v) {
    static_assert(sizeof(double) == 8);
    os.write(reinterpret_cast<const char*>(v.data()),
             static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> read_doubles(std::istream& is, std::size_t n, const std::string& path) {
    std::vector<double> v(n);
    is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (std::size_t(is.gcount()) != n * sizeof(double)) fail_io("truncated payload: " + path);
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(cur);
    return out;
}

double to_double(const std::string& s, const std::string& ctx) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail_io("bad number '" + s + "' in " + ctx);
    }
    return 0.0;
}

} // namespace

double analytic_target(const std::string& id, const Vec3& x) {
    if (id == "f1") return 0.01 + std::sin(2.0 * kPi * (x[0] + x[1] + x[2]) / 10.0);
    if (id == "f2")
        return 0.01 + std::sin(2.0 * kPi * (x[0] + x[1]) / 10.0) + std::cos(2.0 * kPi * x[2] / 20.0);
    if (id == "f3") return x[0] + x[1] * x[1] + 0.5 * x[2] * x[2];
    if (id == "f4")
        return 1.0 + 6.0 * x[0] + 4.0 * x[1] + 9.0 * x[2] + std::sin(2.0 * kPi * (x[0] + x[2])) +
               std::cos(2.0 * kPi * x[1]);
    if (id == "f5") return x[0] + std::exp(x[1] + 0.5 * x[2]);
    if (id == "gauss") {
        Vec3 c(0.5, 0.5, 0.5);
        return std::exp(-(x - c).squaredNorm() / (0.2 * 0.2));
    }
    if (id == "one") return 1.0;
    throw ConfigError("unknown target field: " + id);
}

void add_relative_noise(std::vector<double>& values, double level, std::uint64_t seed) {
    if (level <= 0.0) return;
    double data_norm = 0.0;
    for (double v : values) data_norm += v * v;
    data_norm = std::sqrt(data_norm);
    if (data_norm == 0.0) throw ZeroReference("noise on all-zero data");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::vector<double> noise(values.size());
    double noise_norm = 0.0;
    for (double& e : noise) {
        e = uni(rng);
        noise_norm += e * e;
    }
    noise_norm = std::sqrt(noise_norm);
    double scale = level * data_norm / noise_norm;
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += scale * noise[i];
}

void write_speed_grid(const std::string& path, const SpeedField& field) {
    if (!field.is_gridded()) fail_io("write_speed_grid needs a gridded field");
    auto os = open_out(path, true);
    write_header(os, field.dims(), field.origin(), field.spacing());
    write_doubles(os, field.values());
    if (!os) fail_io("write failed: " + path);
}

SpeedField read_speed_grid(const std::string& path) {
    auto is = open_in(path, true);
    Idx3 dims;
    Vec3 origin, spacing;
    read_header(is, dims, origin, spacing, path);
    auto vals = read_doubles(is, std::size_t(dims[0]) * dims[1] * dims[2], path);
    for (double v : vals)
        if (!(v > 0.0)) fail_io("non-positive speed value in " + path);
    return SpeedField::gridded(origin, spacing, dims, std::move(vals));
}

void write_grid_function(const std::string& path, const GridFunction& f) {
    auto os = open_out(path, true);
    const Grid& g = *f.grid;
    write_header(os, g.dims(), g.origin(), Vec3::Constant(g.spacing()));
    std::vector<double> out(f.values);
    for (std::size_t n = 0; n < out.size(); ++n)
        if (!g.active(n)) out[n] = std::numeric_limits<double>::quiet_NaN();
    write_doubles(os, out);
    if (!os) fail_io("write failed: " + path);
}

GridFunction read_grid_function(const std::string& path, std::shared_ptr<const Grid> grid) {
    auto is = open_in(path, true);
    Idx3 dims;
    Vec3 origin, spacing;
    read_header(is, dims, origin, spacing, path);
    if (!((dims.array() == grid->dims().array()).all()) ||
        (origin - grid->origin()).norm() > 1e-12 ||
        (spacing - Vec3::Constant(grid->spacing())).norm() > 1e-12)
        throw GridMismatch("field file lattice does not match grid: " + path);
    auto vals = read_doubles(is, grid->size(), path);
    GridFunction f(grid);
    for (std::size_t n = 0; n < vals.size(); ++n) {
        if (grid->active(n)) {
            if (std::isnan(vals[n])) fail_io("NaN at active node in " + path);
            f[n] = vals[n];
        }
    }
    return f;
}

void write_dataset(const std::string& path, const XRayDataSet& data,
                   const std::string& speed_ref) {
    auto os = open_out(path, false);
    os << "# speed " << speed_ref << '\n';
    os << "# provenance " << data.provenance << '\n';
    os << "x,y,z,xix,xiy,xiz,exit_time,value\n";
    for (const auto& r : data.records) {
        os << r.x0.x[0] << ',' << r.x0.x[1] << ',' << r.x0.x[2] << ',' << r.x0.xi[0] << ','
           << r.x0.xi[1] << ',' << r.x0.xi[2] << ',' << r.geo.exit_time << ',' << r.value << '\n';
    }
    if (!os) fail_io("write failed: " + path);
}

XRayDataSet read_dataset(const std::string& path, const Domain& domain, const SpeedField& field,
                         const TracerConfig& cfg, std::string* speed_ref) {
    auto is = open_in(path, false);
    XRayDataSet data;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream hs(line.substr(1));
            std::string key;
            hs >> key;
            if (key == "speed" && speed_ref) {
                std::string rest;
                std::getline(hs, rest);
                if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
                *speed_ref = rest;
            } else if (key == "provenance") {
                hs >> data.provenance;
            }
            continue;
        }
        if (line.rfind("x,", 0) == 0) continue; // column header
        auto cols = split_csv(line);
        if (cols.size() != 8) fail_io(path + ":" + std::to_string(lineno) + ": expected 8 columns");
        const std::string ctx = path + ":" + std::to_string(lineno);
        XRayRecord rec;
        for (int i = 0; i < 3; ++i) rec.x0.x[i] = to_double(cols[i], ctx);
        for (int i = 0; i < 3; ++i) rec.x0.xi[i] = to_double(cols[3 + i], ctx);
        double exit_time = to_double(cols[6], ctx);
        rec.value = to_double(cols[7], ctx);
        rec.geo = trace(domain, field, rec.x0, cfg);
        if (rec.geo.exited && std::abs(rec.geo.exit_time - exit_time) > 0.1 * (exit_time + cfg.step))
            fail_io(ctx + ": stored exit time inconsistent with supplied speed field");
        data.records.push_back(std::move(rec));
    }
    return data;
}

void write_measurements(const std::string& path, const std::vector<Measurement>& ms) {
    auto os = open_out(path, false);
    os << "x,y,z,xix,xiy,xiz,ex,ey,ez,exix,exiy,exiz,t\n";
    for (const auto& m : ms) {
        os << m.x0.x[0] << ',' << m.x0.x[1] << ',' << m.x0.x[2] << ',' << m.x0.xi[0] << ','
           << m.x0.xi[1] << ',' << m.x0.xi[2];
        for (int i = 0; i < 6; ++i) os << ',' << m.exit_state[i];
        os << ',' << m.t << '\n';
    }
    if (!os) fail_io("write failed: " + path);
}

std::vector<Measurement> read_measurements(const std::string& path) {
    auto is = open_in(path, false);
    std::vector<Measurement> ms;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("x,", 0) == 0) continue;
        auto cols = split_csv(line);
        if (cols.size() != 13)
            fail_io(path + ":" + std::to_string(lineno) + ": expected 13 columns");
        const std::string ctx = path + ":" + std::to_string(lineno);
        Measurement m;
        for (int i = 0; i < 3; ++i) m.x0.x[i] = to_double(cols[i], ctx);
        for (int i = 0; i < 3; ++i) m.x0.xi[i] = to_double(cols[3 + i], ctx);
        for (int i = 0; i < 6; ++i) m.exit_state[i] = to_double(cols[6 + i], ctx);
        m.t = to_double(cols[12], ctx);
        ms.push_back(m);
    }
    return ms;
}

void export_slice(std::ostream& os, const GridFunction& f, int axis, int index) {
    if (axis < 0 || axis > 2) throw IndexOutOfRange("slice axis must be 0, 1 or 2");
    const Grid& g = *f.grid;
    if (index < 0 || index >= g.dims()[axis]) throw IndexOutOfRange("slice index out of range");
    int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    if (a1 > a2) std::swap(a1, a2);
    const char* names = "xyz";
    os << std::setprecision(17);
    os << names[a1] << ',' << names[a2] << ",value\n";
    Idx3 c;
    c[axis] = index;
    for (int j = 0; j < g.dims()[a2]; ++j) {
        for (int i = 0; i < g.dims()[a1]; ++i) {
            c[a1] = i;
            c[a2] = j;
            std::size_t n = g.index(c[0], c[1], c[2]);
            Vec3 p = g.position(n);
            os << p[a1] << ',' << p[a2] << ',';
            if (g.active(n))
                os << f[n];
            else
                os << "nan";
            os << '\n';
        }
    }
}

void RunConfig::validate() const {
    if (radius <= 0.0) throw ConfigError("radius must be positive");
    if (h <= 0.0 || h >= radius) throw ConfigError("h must be in (0, radius)");
    if (layers < 1) throw ConfigError("layers must be >= 1");
    if (dirs != 3 && dirs != 7) throw ConfigError("dirs must be 3 or 7");
    if (rays < 1) throw ConfigError("rays must be >= 1");
    if (terms < 0) throw ConfigError("terms must be >= 0");
    if (delta < 0.0) throw ConfigError("delta must be >= 0");
    if (step <= 0.0) throw ConfigError("step must be positive");
    if (sweeps < 1) throw ConfigError("sweeps must be >= 1");
    if (noise < 0.0 || noise >= 1.0) throw ConfigError("noise must be in [0, 1)");
    if (speed.empty()) throw ConfigError("speed must be set");
}

void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value) {
    const std::string ctx = "config key " + key;
    if (key == "center") {
        auto cols = split_csv(value);
        if (cols.size() != 3) throw ConfigError("center needs 3 comma-separated values");
        for (int i = 0; i < 3; ++i) cfg.center[i] = to_double(cols[i], ctx);
    } else if (key == "radius")
        cfg.radius = to_double(value, ctx);
    else if (key == "speed")
        cfg.speed = value;
    else if (key == "truth")
        cfg.truth = value;
    else if (key == "h")
        cfg.h = to_double(value, ctx);
    else if (key == "layers")
        cfg.layers = int(to_double(value, ctx));
    else if (key == "dirs")
        cfg.dirs = int(to_double(value, ctx));
    else if (key == "rays")
        cfg.rays = int(to_double(value, ctx));
    else if (key == "terms")
        cfg.terms = int(to_double(value, ctx));
    else if (key == "delta")
        cfg.delta = to_double(value, ctx);
    else if (key == "eps")
        cfg.eps = to_double(value, ctx);
    else if (key == "step")
        cfg.step = to_double(value, ctx);
    else if (key == "sweeps")
        cfg.sweeps = int(to_double(value, ctx));
    else if (key == "max_layers")
        cfg.max_layers = int(to_double(value, ctx));
    else if (key == "noise")
        cfg.noise = to_double(value, ctx);
    else if (key == "seed")
        cfg.seed = std::uint64_t(to_double(value, ctx));
    else if (key == "out_dir")
        cfg.out_dir = value;
    else
        throw ConfigError("unknown config key: " + key);
}

RunConfig load_config(const std::string& path) {
    auto is = open_in(path, false);
    RunConfig cfg;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            auto b = s.find_first_not_of(" \t\r");
            auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        apply_config_line(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return cfg;
}

SpeedField make_speed(const RunConfig& cfg) {
    const std::string& s = cfg.speed;
    if (s.rfind("analytic:", 0) == 0) {
        auto rest = s.substr(9);
        auto colon = rest.find(':');
        std::string id = rest.substr(0, colon);
        std::vector<double> params;
        if (colon != std::string::npos)
            for (const auto& tok : split_csv(rest.substr(colon + 1)))
                params.push_back(to_double(tok, "speed spec"));
        return SpeedField::analytic(id, std::move(params));
    }
    return read_speed_grid(s);
}

std::vector<Vec3> direction_set(int dirs) {
    auto all = default_directions();
    if (dirs == 3) all.resize(3);
    return all;
}

} // namespace geoxray
