#include "geoxray/io.hpp"
#include "geoxray/layers.hpp"
#include "geoxray/neumann.hpp"
#include "geoxray/traveltime.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace geoxray;

PYBIND11_MODULE(_geoxray, m) {
    m.doc() = "geodesic X-ray transform and traveltime tomography toolkit";

    py::register_exception<Error>(m, "GeoxrayError");

    py::class_<Domain>(m, "Domain")
        .def(py::init([](const Vec3& c, double r) { return Domain{c, r}; }), py::arg("center"),
             py::arg("radius"))
        .def_readonly("center", &Domain::center)
        .def_readonly("radius", &Domain::radius)
        .def("contains", &Domain::contains)
        .def("depth", &Domain::depth);

    py::class_<PhasePoint>(m, "PhasePoint")
        .def(py::init([](const Vec3& x, const Vec3& xi) { return PhasePoint{x, xi}; }),
             py::arg("x"), py::arg("xi"))
        .def_readwrite("x", &PhasePoint::x)
        .def_readwrite("xi", &PhasePoint::xi);

    py::class_<SpeedField>(m, "SpeedField")
        .def_static("constant", &SpeedField::constant)
        .def_static("analytic", &SpeedField::analytic)
        .def_static("gridded", &SpeedField::gridded)
        .def("value", &SpeedField::value)
        .def("gradient", &SpeedField::gradient)
        .def("resampled", &SpeedField::resampled);

    m.def("hamiltonian", &hamiltonian);
    m.def("on_shell", &on_shell);
    m.def("is_inflow", &is_inflow);
    m.def("analytic_target", &analytic_target);

    py::class_<TracerConfig>(m, "TracerConfig")
        .def(py::init([](double step, int max_steps) {
                 return TracerConfig{step, max_steps};
             }),
             py::arg("step") = 0.01, py::arg("max_steps") = 0)
        .def_readwrite("step", &TracerConfig::step)
        .def_readwrite("max_steps", &TracerConfig::max_steps);

    py::class_<GeodesicSample>(m, "GeodesicSample")
        .def_readonly("s", &GeodesicSample::s)
        .def_readonly("x", &GeodesicSample::x)
        .def_readonly("xi", &GeodesicSample::xi);

    py::class_<Geodesic>(m, "Geodesic")
        .def_readonly("samples", &Geodesic::samples)
        .def_readonly("exit_time", &Geodesic::exit_time)
        .def_readonly("exited", &Geodesic::exited);

    m.def("trace", &trace, py::arg("domain"), py::arg("field"), py::arg("x0"),
          py::arg("cfg") = TracerConfig{});

    py::enum_<GridLevel>(m, "GridLevel")
        .value("coarse", GridLevel::coarse)
        .value("fine", GridLevel::fine);

    py::class_<Grid, std::shared_ptr<Grid>>(m, "Grid")
        .def_static("make_ball",
                    [](const Domain& d, double h, GridLevel lvl) {
                        return std::const_pointer_cast<Grid>(Grid::make_ball(d, h, lvl));
                    },
                    py::arg("domain"), py::arg("h"), py::arg("level") = GridLevel::fine)
        .def_property_readonly("spacing", &Grid::spacing)
        .def_property_readonly("dims", &Grid::dims)
        .def("size", &Grid::size)
        .def("active", &Grid::active)
        .def("position", &Grid::position)
        .def("active_nodes", &Grid::active_nodes);

    py::class_<GridFunction>(m, "GridFunction")
        .def(py::init([](std::shared_ptr<Grid> g) {
            return GridFunction(std::const_pointer_cast<const Grid>(g));
        }))
        .def_readwrite("values", &GridFunction::values)
        .def("norm2", &GridFunction::norm2)
        .def("__getitem__", [](const GridFunction& f, std::size_t n) { return f[n]; })
        .def("__setitem__", [](GridFunction& f, std::size_t n, double v) { f[n] = v; });

    m.def("sample_on_grid", [](std::shared_ptr<Grid> g, const std::function<double(Vec3)>& f) {
        return sample_on_grid(std::const_pointer_cast<const Grid>(g),
                              [&f](const Vec3& x) { return f(x); });
    });
    m.def("interpolate", &interpolate);
    m.def("restrict_P", &restrict_P);
    m.def("prolong_Pstar", &prolong_Pstar);
    m.def("relative_error", &relative_error);

    py::class_<XRayRecord>(m, "XRayRecord")
        .def(py::init<>())
        .def_readwrite("x0", &XRayRecord::x0)
        .def_readwrite("geo", &XRayRecord::geo)
        .def_readwrite("value", &XRayRecord::value);

    py::class_<XRayDataSet>(m, "XRayDataSet")
        .def(py::init<>())
        .def_readwrite("records", &XRayDataSet::records)
        .def_readwrite("provenance", &XRayDataSet::provenance);

    m.def("forward", &forward);

    py::class_<Region>(m, "Region")
        .def_static("make",
                    [](std::shared_ptr<Grid> fine, double eps) {
                        return Region::make(std::const_pointer_cast<const Grid>(fine), eps);
                    },
                    py::arg("fine"), py::arg("eps") = -1.0);

    py::class_<NeumannResult>(m, "NeumannResult")
        .def_readonly("f", &NeumannResult::f)
        .def_readonly("errors", &NeumannResult::errors)
        .def_readonly("empty_nodes", &NeumannResult::empty_nodes)
        .def_readonly("krylov_iterations", &NeumannResult::krylov_iterations);

    m.def(
        "reconstruct",
        [](const XRayDataSet& data, const Region& region, int N, double delta,
           const SpeedField& field, const GridFunction* truth) {
            return reconstruct(data, region, N, delta, field, truth);
        },
        py::arg("data"), py::arg("region"), py::arg("N"), py::arg("delta"), py::arg("field"),
        py::arg("truth") = nullptr);

    m.def("add_relative_noise", [](std::vector<double> v, double level, std::uint64_t seed) {
        add_relative_noise(v, level, seed);
        return v;
    });

    py::class_<Disk>(m, "Disk")
        .def_readonly("layer", &Disk::layer)
        .def_readonly("direction", &Disk::direction)
        .def_readonly("slab", &Disk::slab)
        .def_readonly("slab_lo", &Disk::slab_lo)
        .def_readonly("slab_hi", &Disk::slab_hi)
        .def_readonly("fine_nodes", &Disk::fine_nodes);

    py::class_<LayerPartition>(m, "LayerPartition")
        .def_readonly("k", &LayerPartition::k)
        .def_readonly("thickness", &LayerPartition::thickness)
        .def_readonly("shell_of_node", &LayerPartition::shell_of_node)
        .def_readonly("layers", &LayerPartition::layers)
        .def("shell_at", &LayerPartition::shell_at);

    m.def("default_directions", &default_directions);
    m.def(
        "build_partition",
        [](const Domain& dom, std::shared_ptr<Grid> fine, int k) {
            return build_partition(dom, std::const_pointer_cast<const Grid>(fine), k,
                                   default_directions());
        },
        py::arg("domain"), py::arg("fine"), py::arg("k"));

    py::class_<StripOptions>(m, "StripOptions")
        .def(py::init<>())
        .def_readwrite("N", &StripOptions::N)
        .def_readwrite("delta", &StripOptions::delta)
        .def_readwrite("max_layers", &StripOptions::max_layers)
        .def_readwrite("tracer", &StripOptions::tracer);

    py::class_<LayerReport>(m, "LayerReport")
        .def_readonly("layer", &LayerReport::layer)
        .def_readonly("rel_error", &LayerReport::rel_error);

    py::class_<StripReport>(m, "StripReport")
        .def(py::init<>())
        .def_readonly("layers", &StripReport::layers);

    m.def(
        "strip_reconstruct",
        [](const XRayDataSet& data, const LayerPartition& part, const SpeedField& field,
           const StripOptions& opt, StripReport* rep, const GridFunction* truth) {
            return strip_reconstruct(data, part, field, opt, rep, truth);
        },
        py::arg("data"), py::arg("part"), py::arg("field"), py::arg("opt"),
        py::arg("report") = nullptr, py::arg("truth") = nullptr);

    py::class_<Measurement>(m, "Measurement")
        .def(py::init<>())
        .def_readwrite("x0", &Measurement::x0)
        .def_readwrite("exit_state", &Measurement::exit_state)
        .def_readwrite("t", &Measurement::t);

    py::class_<TraveltimeOptions>(m, "TraveltimeOptions")
        .def(py::init<>())
        .def_readwrite("sweeps", &TraveltimeOptions::sweeps)
        .def_readwrite("passes", &TraveltimeOptions::passes)
        .def_readwrite("N", &TraveltimeOptions::N)
        .def_readwrite("delta", &TraveltimeOptions::delta)
        .def_readwrite("tracer", &TraveltimeOptions::tracer)
        .def_readwrite("max_layers", &TraveltimeOptions::max_layers)
        .def_readwrite("trust_factor", &TraveltimeOptions::trust_factor)
        .def_readwrite("relax", &TraveltimeOptions::relax);

    py::class_<TraveltimeLayerReport>(m, "TraveltimeLayerReport")
        .def_readonly("layer", &TraveltimeLayerReport::layer)
        .def_readonly("disks", &TraveltimeLayerReport::disks)
        .def_readonly("disks_without_rays", &TraveltimeLayerReport::disks_without_rays)
        .def_readonly("disks_stalled", &TraveltimeLayerReport::disks_stalled)
        .def_readonly("rays_used", &TraveltimeLayerReport::rays_used)
        .def_readonly("rays_discarded", &TraveltimeLayerReport::rays_discarded)
        .def_readonly("rel_error", &TraveltimeLayerReport::rel_error);

    py::class_<TraveltimeReport>(m, "TraveltimeReport")
        .def(py::init<>())
        .def_readonly("layers", &TraveltimeReport::layers);

    py::class_<MetricIterate>(m, "MetricIterate")
        .def_readonly("c", &MetricIterate::c)
        .def_readonly("iteration", &MetricIterate::iteration);

    m.def("synth_measurements", &synth_measurements, py::arg("part"), py::arg("truth"),
          py::arg("rays_per_disk"), py::arg("tracer"), py::arg("max_layers") = 0);
    m.def("metric_on_grid", &metric_on_grid);
    m.def(
        "solve_traveltime",
        [](const std::vector<Measurement>& ms, const SpeedField& g0, const LayerPartition& part,
           const TraveltimeOptions& opt, TraveltimeReport* rep, const SpeedField* truth) {
            return solve_traveltime(ms, g0, part, opt, rep, truth);
        },
        py::arg("measurements"), py::arg("g0"), py::arg("part"), py::arg("opt"),
        py::arg("report") = nullptr, py::arg("truth") = nullptr);
}
