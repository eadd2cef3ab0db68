#include "geoxray/io.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace geoxray;
using testing::ball;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("geoxray_test_" + std::to_string(::getpid()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

} // namespace

TEST_CASE("speed grid round-trip is bit exact") {
    TempDir tmp;
    auto c = SpeedField::analytic("radial_cos", {1.0, 0.3, 0.5, 0.5, 0.5})
                 .resampled(Vec3(0.05, 0.05, 0.05), Vec3::Constant(0.03), Idx3(31, 31, 31));
    write_speed_grid(tmp.file("c.bin"), c);
    SpeedField back = read_speed_grid(tmp.file("c.bin"));
    REQUIRE(back.values().size() == c.values().size());
    for (std::size_t i = 0; i < c.values().size(); ++i) CHECK(back.values()[i] == c.values()[i]);
    CHECK((back.origin() - c.origin()).norm() == 0.0);
}

TEST_CASE("grid function round-trip and NaN sentinel") {
    TempDir tmp;
    auto fine = Grid::make_ball(ball(), 0.08);
    GridFunction f = sample_on_grid(fine, [](const Vec3& x) { return x[0] * x[1] + x[2]; });
    write_grid_function(tmp.file("f.bin"), f);
    GridFunction back = read_grid_function(tmp.file("f.bin"), fine);
    for (std::size_t n = 0; n < f.values.size(); ++n)
        if (fine->active(n)) CHECK(back[n] == f[n]);

    auto other = Grid::make_ball(ball(), 0.1);
    CHECK_THROWS_AS(read_grid_function(tmp.file("f.bin"), other), GridMismatch);
}

TEST_CASE("dataset round-trip preserves records") {
    TempDir tmp;
    Domain dom = ball();
    auto c = SpeedField::constant(1.0);
    TracerConfig cfg{0.01, 0};
    XRayDataSet data = testing::axis_chords(dom, c, 4, cfg, [](const Vec3& x) {
        return analytic_target("f3", x);
    });
    write_dataset(tmp.file("d.csv"), data, "const:1");
    std::string ref;
    XRayDataSet back = read_dataset(tmp.file("d.csv"), dom, c, cfg, &ref);
    CHECK(ref == "const:1");
    REQUIRE(back.records.size() == data.records.size());
    for (std::size_t i = 0; i < data.records.size(); ++i) {
        CHECK(back.records[i].value == data.records[i].value);
        CHECK((back.records[i].x0.x - data.records[i].x0.x).norm() == 0.0);
        CHECK((back.records[i].x0.xi - data.records[i].x0.xi).norm() == 0.0);
        CHECK(back.records[i].geo.exit_time ==
              doctest::Approx(data.records[i].geo.exit_time).epsilon(1e-12));
    }
}

TEST_CASE("measurement round-trip is bit exact") {
    TempDir tmp;
    std::vector<Measurement> ms(3);
    for (int i = 0; i < 3; ++i) {
        ms[i].x0 = {Vec3(0.1 * i, 0.2, 0.3), Vec3(1.0 / 3.0, -0.1 * i, 0.7)};
        for (int k = 0; k < 6; ++k) ms[i].exit_state[k] = std::sqrt(2.0 + i + k);
        ms[i].t = 0.123456789012345 + i;
    }
    write_measurements(tmp.file("m.csv"), ms);
    auto back = read_measurements(tmp.file("m.csv"));
    REQUIRE(back.size() == ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i) {
        CHECK((back[i].x0.x - ms[i].x0.x).norm() == 0.0);
        CHECK((back[i].x0.xi - ms[i].x0.xi).norm() == 0.0);
        CHECK((back[i].exit_state - ms[i].exit_state).norm() == 0.0);
        CHECK(back[i].t == ms[i].t);
    }
}

TEST_CASE("noise hits the requested relative level exactly") {
    std::vector<double> vals(500);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = std::sin(0.1 * double(i)) + 2.0;
    std::vector<double> noisy = vals;
    add_relative_noise(noisy, 0.05, 42);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < vals.size(); ++i) {
        num += (noisy[i] - vals[i]) * (noisy[i] - vals[i]);
        den += vals[i] * vals[i];
    }
    CHECK(std::abs(std::sqrt(num / den) - 0.05) < 1e-12);

    std::vector<double> again = vals;
    add_relative_noise(again, 0.05, 42);
    for (std::size_t i = 0; i < vals.size(); ++i) CHECK(again[i] == noisy[i]);

    std::vector<double> zeros(10, 0.0);
    CHECK_THROWS_AS(add_relative_noise(zeros, 0.05, 1), ZeroReference);
}

TEST_CASE("config file parsing and overrides") {
    TempDir tmp;
    {
        std::ofstream os(tmp.file("run.cfg"));
        os << "# comment\n";
        os << "speed = analytic:const:1\n";
        os << "h = 0.05\n";
        os << "terms = 3   # inline comment\n";
    }
    RunConfig cfg = load_config(tmp.file("run.cfg"));
    CHECK(cfg.speed == "analytic:const:1");
    CHECK(cfg.h == 0.05);
    CHECK(cfg.terms == 3);
    apply_config_line(cfg, "h", "0.04");
    CHECK(cfg.h == 0.04);
    CHECK_THROWS_AS(apply_config_line(cfg, "bogus", "1"), ConfigError);
    cfg.validate();
    cfg.rays = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("make_speed parses analytic specs") {
    RunConfig cfg;
    cfg.speed = "analytic:radial_cos:1,0.3,0.5,0.5,0.5";
    SpeedField c = make_speed(cfg);
    CHECK(c.value(Vec3(0.5, 0.5, 0.5)) == doctest::Approx(1.3));
}

TEST_CASE("slice export") {
    auto fine = Grid::make_ball(ball(), 0.08);
    GridFunction f = sample_on_grid(fine, [](const Vec3& x) {
        return analytic_target("f3", x);
    });
    int mid = fine->dims()[2] / 2;
    std::ostringstream os;
    export_slice(os, f, 2, mid);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "x,y,value");
    std::size_t rows = 0, nans = 0;
    double zc = fine->position(fine->index(0, 0, mid))[2];
    while (std::getline(is, line)) {
        ++rows;
        auto c1 = line.find(','), c2 = line.find(',', line.find(',') + 1);
        std::string val = line.substr(c2 + 1);
        if (val == "nan") {
            ++nans;
            continue;
        }
        double x = std::stod(line.substr(0, c1));
        double y = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
        CHECK(std::stod(val) ==
              doctest::Approx(analytic_target("f3", Vec3(x, y, zc))).epsilon(1e-12));
    }
    CHECK(rows == std::size_t(fine->dims()[0]) * fine->dims()[1]);
    CHECK(nans > 0);
    CHECK_THROWS_AS(export_slice(os, f, 2, 10000), IndexOutOfRange);
    CHECK_THROWS_AS(export_slice(os, f, 5, 0), IndexOutOfRange);
}

TEST_CASE("analytic targets evaluate their formulas") {
    Vec3 x(0.3, 0.6, 0.4);
    CHECK(analytic_target("f3", x) == doctest::Approx(0.3 + 0.36 + 0.08).epsilon(1e-14));
    CHECK(analytic_target("f5", x) == doctest::Approx(0.3 + std::exp(0.8)).epsilon(1e-14));
    CHECK_THROWS_AS(analytic_target("nope", x), ConfigError);
}
