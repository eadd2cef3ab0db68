#ifndef GEOXRAY_IO_HPP
#define GEOXRAY_IO_HPP

#include "geoxray/traveltime.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace geoxray {

// Named analytic test fields (the reconstruction targets).
//   f1 = 0.01 + sin(2 pi (x+y+z)/10)
//   f2 = 0.01 + sin(2 pi (x+y)/10) + cos(2 pi z/20)
//   f3 = x + y^2 + z^2/2
//   f4 = 1 + 6x + 4y + 9z + sin(2 pi (x+z)) + cos(2 pi y)
//   f5 = x + exp(y + z/2)
//   gauss(center cx,cy,cz; width w) = exp(-|x-c|^2 / w^2)
double analytic_target(const std::string& id, const Vec3& x);

// Scales a uniformly distributed perturbation so that the noise-to-data
// ratio in the 2-norm equals `level` exactly.
void add_relative_noise(std::vector<double>& values, double level, std::uint64_t seed);

// --- speed / field grid files -------------------------------------------
// 3 text header lines (`nx ny nz`, `ox oy oz`, `dx dy dz`) followed by
// nx*ny*nz little-endian 64-bit floats, x-fastest. Field files use the same
// layout with NaN at non-active nodes.
void write_speed_grid(const std::string& path, const SpeedField& field);
SpeedField read_speed_grid(const std::string& path);

void write_grid_function(const std::string& path, const GridFunction& f);
// Values are reattached to the given grid; NaN nodes must be non-active.
GridFunction read_grid_function(const std::string& path, std::shared_ptr<const Grid> grid);

// --- datasets -------------------------------------------------------------
// CSV, one record per line: x,y,z,xix,xiy,xiz,exit_time,value.
// A `# speed <path>` header line names the field; geodesics are re-traced on
// load with the supplied config.
void write_dataset(const std::string& path, const XRayDataSet& data,
                   const std::string& speed_ref);
XRayDataSet read_dataset(const std::string& path, const Domain& domain, const SpeedField& field,
                         const TracerConfig& cfg, std::string* speed_ref = nullptr);

// Measurement CSV: 6 entry floats, 6 exit floats, t per line.
void write_measurements(const std::string& path, const std::vector<Measurement>& ms);
std::vector<Measurement> read_measurements(const std::string& path);

// 2D slice as CSV (coord1,coord2,value); non-active nodes emit nan.
void export_slice(std::ostream& os, const GridFunction& f, int axis, int index);

// --- run configuration -----------------------------------------------------
struct RunConfig {
    Vec3 center{0.5, 0.5, 0.5};
    double radius = 0.4;
    std::string speed;      // file path or "analytic:id:p0,p1,..."
    std::string truth;      // analytic target id (xray) or speed spec (traveltime)
    double h = 0.04;
    int layers = 1;
    int dirs = 3;           // 3 axes; 7 adds body diagonals
    int rays = 200;         // per disk before filtering
    int terms = 4;          // N
    double delta = 0.2;
    double eps = -1.0;
    double step = 0.01;
    int sweeps = 5;
    int max_layers = 0;
    double noise = 0.0;
    std::uint64_t seed = 1;
    std::string out_dir = ".";

    void validate() const;
};

// Line-oriented `key = value` file; unknown keys are an error.
RunConfig load_config(const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

SpeedField make_speed(const RunConfig& cfg);
std::vector<Vec3> direction_set(int dirs);

} // namespace geoxray

#endif
