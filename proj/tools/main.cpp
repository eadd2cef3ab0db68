#include "geoxray/io.hpp"
#include "geoxray/neumann.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using nlohmann::json;
using namespace geoxray;

namespace {

void report(const json& j) { std::cout << j.dump() << "\n"; }

struct Cli {
    RunConfig cfg;
    std::string config_path;
    std::vector<std::pair<std::string, std::string>> overrides;

    void wire(CLI::App* app) {
        app->add_option("--config", config_path, "key = value config file");
        // "h" clashes with CLI11's -h help flag, so the grid spacing is
        // spelled --spacing on the command line
        app->add_option_function<std::string>(
            "--spacing", [this](const std::string& v) { overrides.emplace_back("h", v); });
        for (const char* key : {"center", "radius", "speed", "truth", "layers", "dirs",
                                "rays", "terms", "delta", "eps", "step", "sweeps", "max_layers",
                                "noise", "seed", "out_dir"}) {
            app->add_option_function<std::string>(
                std::string("--") + key,
                [this, key](const std::string& v) { overrides.emplace_back(key, v); });
        }
    }

    RunConfig resolve() {
        RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (const auto& [k, v] : overrides) apply_config_line(c, k, v);
        c.validate();
        return c;
    }
};

Domain domain_of(const RunConfig& c) { return Domain{c.center, c.radius}; }

// datasets name their speed in a "# speed <spec>" header; use it as the
// default so invert runs don't need --speed repeated
std::string dataset_speed_header(const std::string& path) {
    std::ifstream is(path);
    std::string line;
    if (is && std::getline(is, line) && line.rfind("# speed ", 0) == 0)
        return line.substr(8);
    return {};
}

SpeedField speed_from_spec(const std::string& spec) {
    RunConfig tmp;
    tmp.speed = spec;
    return make_speed(tmp);
}

LayerPartition partition_of(const RunConfig& cfg, std::shared_ptr<const Grid> fine) {
    // layers == 1 with full-height slabs reduces to a single whole-ball disk
    // per direction; layer stripping proper needs slab_height = h (default).
    double slab = cfg.layers == 1 ? 2.0 * cfg.radius + cfg.h : -1.0;
    return build_partition(domain_of(cfg), fine, cfg.layers, direction_set(cfg.dirs), slab);
}

std::vector<PhasePoint> read_ics(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open for reading: " + path);
    std::vector<PhasePoint> ics;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("x,", 0) == 0) continue;
        std::istringstream ls(line);
        PhasePoint p;
        char comma;
        if (!(ls >> p.x[0] >> comma >> p.x[1] >> comma >> p.x[2] >> comma >> p.xi[0] >> comma >>
              p.xi[1] >> comma >> p.xi[2]))
            throw IoError(path + ":" + std::to_string(lineno) + ": expected 6 columns");
        ics.push_back(p);
    }
    return ics;
}

GridFunction truth_on(std::shared_ptr<const Grid> grid, const std::string& id) {
    return sample_on_grid(std::move(grid),
                          [&id](const Vec3& x) { return analytic_target(id, x); });
}

// Values from a fine ray tracing of the analytic target (the data oracle).
XRayDataSet simulate_xray(const RunConfig& cfg, const SpeedField& field) {
    if (cfg.truth.empty()) throw ConfigError("synth/forward need truth = <target id>");
    Domain dom = domain_of(cfg);
    auto fine = Grid::make_ball(dom, cfg.h);
    LayerPartition part = partition_of(cfg, fine);
    TracerConfig oracle{cfg.step / 4.0, 0};

    XRayDataSet data;
    for (const auto& layer : part.layers) {
        for (const auto& disk : layer) {
            auto ics = generate_initial_conditions(part, disk, field, cfg.rays, oracle);
            for (const auto& x0 : ics) {
                XRayRecord rec;
                rec.x0 = x0;
                rec.geo = trace(dom, field, x0, oracle);
                double v = 0.0;
                const auto& smp = rec.geo.samples;
                for (std::size_t i = 0; i + 1 < smp.size(); ++i) {
                    double a = analytic_target(cfg.truth, smp[i].x) * phase_speed(field, smp[i]);
                    double b = analytic_target(cfg.truth, smp[i + 1].x) *
                               phase_speed(field, smp[i + 1]);
                    v += 0.5 * (a + b) * (smp[i + 1].s - smp[i].s);
                }
                rec.value = v;
                data.records.push_back(std::move(rec));
            }
        }
    }
    if (data.records.empty()) throw NoValidRays("synthesis produced no usable rays");
    if (cfg.noise > 0.0) {
        std::vector<double> vals(data.records.size());
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = data.records[i].value;
        add_relative_noise(vals, cfg.noise, cfg.seed);
        for (std::size_t i = 0; i < vals.size(); ++i) data.records[i].value = vals[i];
    }
    return data;
}

int run_synth(Cli& cli, const std::string& mode, const std::string& out) {
    RunConfig cfg = cli.resolve();
    SpeedField field = make_speed(cfg);
    if (mode == "xray") {
        XRayDataSet data = simulate_xray(cfg, field);
        write_dataset(out, data, cfg.speed);
        report({{"event", "synth"},
                {"mode", mode},
                {"records", data.records.size()},
                {"noise", cfg.noise},
                {"seed", cfg.seed},
                {"out", out}});
    } else if (mode == "traveltime") {
        if (cfg.noise > 0.0) throw ConfigError("noise is only supported in xray mode");
        if (cfg.truth.empty()) throw ConfigError("traveltime synth needs truth = <speed spec>");
        SpeedField truth = speed_from_spec(cfg.truth);
        auto fine = Grid::make_ball(domain_of(cfg), cfg.h);
        LayerPartition part = partition_of(cfg, fine);
        TracerConfig tracer{cfg.step, 0};
        auto ms = synth_measurements(part, truth, cfg.rays, tracer, cfg.max_layers);
        write_measurements(out, ms);
        report({{"event", "synth"}, {"mode", mode}, {"records", ms.size()}, {"out", out}});
    } else {
        throw ConfigError("mode must be xray or traveltime");
    }
    return 0;
}

int run_trace(Cli& cli, const std::string& ics_path, const std::string& out) {
    RunConfig cfg = cli.resolve();
    SpeedField field = make_speed(cfg);
    Domain dom = domain_of(cfg);
    TracerConfig tracer{cfg.step, 0};
    auto ics = read_ics(ics_path);
    std::ofstream os(out);
    if (!os) throw IoError("cannot open for writing: " + out);
    os << std::setprecision(17);
    std::size_t trapped = 0;
    for (std::size_t r = 0; r < ics.size(); ++r) {
        Geodesic geo = trace(dom, field, ics[r], tracer);
        if (!geo.exited) ++trapped;
        os << "# ray " << r << " exit_time " << geo.exit_time << " exited " << geo.exited << '\n';
        os << "s,x,y,z,xix,xiy,xiz\n";
        for (const auto& p : geo.samples)
            os << p.s << ',' << p.x[0] << ',' << p.x[1] << ',' << p.x[2] << ',' << p.xi[0] << ','
               << p.xi[1] << ',' << p.xi[2] << '\n';
        os << '\n';
    }
    report({{"event", "trace"}, {"rays", ics.size()}, {"trapped", trapped}, {"out", out}});
    return 0;
}

int run_forward(Cli& cli, const std::string& ics_path, const std::string& out) {
    RunConfig cfg = cli.resolve();
    if (cfg.truth.empty()) throw ConfigError("forward needs truth = <target id>");
    SpeedField field = make_speed(cfg);
    Domain dom = domain_of(cfg);
    auto fine = Grid::make_ball(dom, cfg.h);
    GridFunction f = truth_on(fine, cfg.truth);
    TracerConfig tracer{cfg.step, 0};

    XRayDataSet data;
    for (const auto& x0 : read_ics(ics_path)) {
        XRayRecord rec;
        rec.x0 = x0;
        rec.geo = trace(dom, field, x0, tracer);
        rec.value = forward(f, field, rec.geo);
        data.records.push_back(std::move(rec));
    }
    write_dataset(out, data, cfg.speed);
    report({{"event", "forward"}, {"records", data.records.size()}, {"out", out}});
    return 0;
}

int run_invert_xray(Cli& cli, const std::string& data_path, const std::string& out) {
    std::string header = dataset_speed_header(data_path);
    if (!header.empty())
        cli.overrides.insert(cli.overrides.begin(), {"speed", header});
    RunConfig cfg = cli.resolve();
    SpeedField field = make_speed(cfg);
    Domain dom = domain_of(cfg);
    auto fine = Grid::make_ball(dom, cfg.h);
    TracerConfig tracer{cfg.step, 0};
    XRayDataSet data = read_dataset(data_path, dom, field, tracer);

    if (cfg.layers == 1) {
        Region region = Region::make(fine, cfg.eps);
        GridFunction truth;
        if (!cfg.truth.empty()) truth = truth_on(region.coarse, cfg.truth);
        KrylovOptions krylov;
        NeumannResult res = reconstruct(data, region, cfg.terms, cfg.delta, field,
                                        cfg.truth.empty() ? nullptr : &truth, krylov);
        for (std::size_t n = 0; n < res.errors.size(); ++n)
            report({{"event", "term"}, {"n", n}, {"rel_error", res.errors[n]}});
        report({{"event", "invert-xray"},
                {"records", data.records.size()},
                {"terms", cfg.terms},
                {"empty_nodes", res.empty_nodes},
                {"krylov_iterations", res.krylov_iterations},
                {"out", out}});
        write_grid_function(out, res.f);
    } else {
        LayerPartition part = partition_of(cfg, fine);
        StripOptions opt;
        opt.N = cfg.terms;
        opt.delta = cfg.delta;
        opt.eps = cfg.eps;
        opt.tracer = tracer;
        opt.max_layers = cfg.max_layers;
        GridFunction truth;
        if (!cfg.truth.empty()) truth = truth_on(fine->with_level(GridLevel::coarse), cfg.truth);
        StripReport rep;
        GridFunction f = strip_reconstruct(data, part, field, opt, &rep,
                                           cfg.truth.empty() ? nullptr : &truth);
        for (const auto& l : rep.layers)
            report({{"event", "layer"},
                    {"layer", l.layer},
                    {"disks", l.disks},
                    {"disks_without_rays", l.disks_without_rays},
                    {"records_used", l.records_used},
                    {"rel_error", l.rel_error}});
        report({{"event", "invert-xray"},
                {"records", data.records.size()},
                {"unassigned", rep.records_unassigned},
                {"out", out}});
        write_grid_function(out, f);
    }
    return 0;
}

int run_invert_traveltime(Cli& cli, const std::string& data_path, const std::string& g0_spec,
                          const std::string& out) {
    cli.overrides.insert(cli.overrides.begin(), {"speed", g0_spec});
    RunConfig cfg = cli.resolve();
    Domain dom = domain_of(cfg);
    auto fine = Grid::make_ball(dom, cfg.h);
    LayerPartition part = partition_of(cfg, fine);
    auto ms = read_measurements(data_path);

    SpeedField g0 = metric_on_grid(part, speed_from_spec(g0_spec));
    TraveltimeOptions opt;
    opt.sweeps = cfg.sweeps;
    opt.N = cfg.terms;
    opt.delta = cfg.delta;
    opt.eps = cfg.eps;
    opt.tracer = TracerConfig{cfg.step, 0};
    opt.max_layers = cfg.max_layers;

    std::optional<SpeedField> truth;
    if (!cfg.truth.empty()) truth = speed_from_spec(cfg.truth);
    TraveltimeReport rep;
    MetricIterate it = solve_traveltime(ms, g0, part, opt, &rep, truth ? &*truth : nullptr);
    for (const auto& l : rep.layers)
        report({{"event", "layer"},
                {"layer", l.layer},
                {"disks", l.disks},
                {"disks_without_rays", l.disks_without_rays},
                {"disks_stalled", l.disks_stalled},
                {"rays_used", l.rays_used},
                {"rays_discarded", l.rays_discarded},
                {"rel_error", l.rel_error}});
    report({{"event", "invert-traveltime"},
            {"measurements", ms.size()},
            {"sweeps", cfg.sweeps},
            {"out", out}});
    write_speed_grid(out, it.c);
    return 0;
}

int run_export(Cli& cli, const std::string& field_path, const std::string& level, int axis,
               int index, const std::string& out) {
    // slicing a stored field never touches the metric
    cli.overrides.insert(cli.overrides.begin(), {"speed", "analytic:const:1"});
    RunConfig cfg = cli.resolve();
    auto grid = Grid::make_ball(domain_of(cfg), cfg.h,
                                level == "coarse" ? GridLevel::coarse : GridLevel::fine);
    GridFunction f = read_grid_function(field_path, grid);
    std::ofstream os(out);
    if (!os) throw IoError("cannot open for writing: " + out);
    export_slice(os, f, axis, index);
    report({{"event", "export"}, {"axis", axis}, {"index", index}, {"out", out}});
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"geodesic X-ray transform and traveltime tomography toolkit"};
    app.require_subcommand(1);

    Cli cli;
    std::string mode = "xray", ics, data, out, field_path, g0, level = "coarse";
    int axis = 2, index = 0;

    auto* synth = app.add_subcommand("synth", "simulate a dataset");
    cli.wire(synth);
    synth->add_option("--mode", mode)->check(CLI::IsMember({"xray", "traveltime"}));
    synth->add_option("--out", out)->required();

    auto* trc = app.add_subcommand("trace", "trace geodesics from an initial-condition list");
    cli.wire(trc);
    trc->add_option("--ics", ics)->required();
    trc->add_option("--out", out)->required();

    auto* fwd = app.add_subcommand("forward", "discrete forward transform along traced rays");
    cli.wire(fwd);
    fwd->add_option("--ics", ics)->required();
    fwd->add_option("--out", out)->required();

    auto* inv = app.add_subcommand("invert-xray", "Neumann-series / layer-stripping inversion");
    cli.wire(inv);
    inv->add_option("--data", data)->required();
    inv->add_option("--out", out)->required();

    auto* tt = app.add_subcommand("invert-traveltime", "linearized traveltime tomography");
    cli.wire(tt);
    tt->add_option("--data", data)->required();
    tt->add_option("--g0", g0, "initial speed guess (file or analytic:id:params)")->required();
    tt->add_option("--out", out)->required();

    auto* exp = app.add_subcommand("export", "export a 2D slice of a stored field as CSV");
    cli.wire(exp);
    exp->add_option("--field", field_path)->required();
    exp->add_option("--level", level)->check(CLI::IsMember({"coarse", "fine"}));
    exp->add_option("--axis", axis)->check(CLI::Range(0, 2));
    exp->add_option("--index", index);
    exp->add_option("--out", out)->required();

    try {
        app.parse(argc, argv);
        if (*synth) return run_synth(cli, mode, out);
        if (*trc) return run_trace(cli, ics, out);
        if (*fwd) return run_forward(cli, ics, out);
        if (*inv) return run_invert_xray(cli, data, out);
        if (*tt) return run_invert_traveltime(cli, data, g0, out);
        if (*exp) return run_export(cli, field_path, level, axis, index, out);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        report({{"event", "error"}, {"kind", "config"}, {"what", e.what()}});
        return 2;
    } catch (const IoError& e) {
        report({{"event", "error"}, {"kind", "io"}, {"what", e.what()}});
        return 4;
    } catch (const Error& e) {
        report({{"event", "error"}, {"kind", "numerical"}, {"what", e.what()}});
        return 3;
    }
    return 0;
}
