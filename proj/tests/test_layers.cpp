#include "geoxray/io.hpp"
#include "geoxray/layers.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace geoxray;
using testing::ball;

TEST_CASE("direction set") {
    auto dirs = default_directions();
    REQUIRE(dirs.size() == 7);
    for (const auto& d : dirs) CHECK(d.norm() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("partition shells follow the depth function") {
    Domain dom = ball();
    auto fine = Grid::make_ball(dom, 0.05);
    LayerPartition part = build_partition(dom, fine, 4, default_directions());
    CHECK(part.thickness == doctest::Approx(0.1));
    REQUIRE(int(part.layers.size()) == 4);
    for (std::size_t n = 0; n < fine->size(); ++n) {
        if (!fine->masked(n)) {
            CHECK(part.shell_of_node[n] == -1);
            continue;
        }
        CHECK(part.shell_of_node[n] == part.shell_at(fine->position(n)));
    }
    // every masked node belongs to at least one disk of its shell
    std::vector<char> seen(fine->size(), 0);
    for (const auto& layer : part.layers)
        for (const auto& disk : layer)
            for (std::size_t n : disk.fine_nodes) seen[n] = 1;
    for (std::size_t n = 0; n < fine->size(); ++n)
        if (fine->masked(n)) CHECK(seen[n] == 1);
}

TEST_CASE("full-height slabs give one disk per shell and direction") {
    Domain dom = ball();
    auto fine = Grid::make_ball(dom, 0.08);
    LayerPartition part = build_partition(dom, fine, 2, default_directions(),
                                          2.0 * dom.radius + fine->spacing());
    for (const auto& layer : part.layers) CHECK(layer.size() == 7);
}

TEST_CASE("geodesic containment in a disk") {
    Domain dom = ball();
    auto one = SpeedField::constant(1.0);
    auto fine = Grid::make_ball(dom, 0.04);
    LayerPartition part = build_partition(dom, fine, 2, {Vec3(0.0, 0.0, 1.0)});
    TracerConfig cfg{0.005, 0};

    // shallow chord at the top of the ball stays in shell 1
    double z0 = dom.center[2] + dom.radius - 0.05;
    double rc = std::sqrt(dom.radius * dom.radius - (z0 - dom.center[2]) * (z0 - dom.center[2]));
    PhasePoint shallow{Vec3(dom.center[0] - rc, dom.center[1], z0), Vec3(1.0, 0.0, 0.0)};
    Geodesic geo = trace(dom, one, shallow, cfg);
    const Disk* home = nullptr;
    for (const auto& disk : part.layers[0])
        if (z0 >= disk.slab_lo && z0 < disk.slab_hi) home = &disk;
    REQUIRE(home != nullptr);
    CHECK(geodesic_in_disk(part, *home, geo));

    // diametric chord crosses the inner shell: not valid for any layer-1 disk
    PhasePoint deep{dom.center - Vec3(dom.radius, 0.0, 0.0), Vec3(1.0, 0.0, 0.0)};
    Geodesic dgeo = trace(dom, one, deep, cfg);
    for (const auto& disk : part.layers[0]) CHECK_FALSE(geodesic_in_disk(part, disk, dgeo));
}

TEST_CASE("generated initial conditions are valid disk rays") {
    Domain dom = ball();
    auto c = SpeedField::analytic("radial_cos", {1.0, 0.3, 0.5, 0.5, 0.5});
    auto fine = Grid::make_ball(dom, 0.04);
    LayerPartition part = build_partition(dom, fine, 4, default_directions());
    TracerConfig cfg{0.005, 0};
    const Disk& disk = part.layers[0][part.layers[0].size() / 2];
    auto ics = generate_initial_conditions(part, disk, c, 60, cfg);
    CHECK(ics.size() >= 10);
    for (const auto& x0 : ics) {
        CHECK(is_inflow(dom, c, x0));
        CHECK(std::abs(hamiltonian(c, x0)) < 1e-12);
        Geodesic geo = trace(dom, c, x0, cfg);
        CHECK(geodesic_in_disk(part, disk, geo));
    }
}

TEST_CASE("stripping with a single layer matches the whole-ball series") {
    Domain dom = ball();
    auto one = SpeedField::constant(1.0);
    auto fine = Grid::make_ball(dom, 0.08);
    LayerPartition part = build_partition(dom, fine, 1, default_directions(),
                                          2.0 * dom.radius + fine->spacing());
    XRayDataSet data;
    TracerConfig oracle{0.0025, 0};
    for (const auto& disk : part.layers[0]) {
        for (const auto& x0 : generate_initial_conditions(part, disk, one, 300, oracle)) {
            XRayRecord rec;
            rec.x0 = x0;
            rec.geo = trace(dom, one, x0, oracle);
            double v = 0.0;
            const auto& smp = rec.geo.samples;
            for (std::size_t s = 0; s + 1 < smp.size(); ++s)
                v += 0.5 *
                     (analytic_target("f3", smp[s].x) * phase_speed(one, smp[s]) +
                      analytic_target("f3", smp[s + 1].x) * phase_speed(one, smp[s + 1])) *
                     (smp[s + 1].s - smp[s].s);
            rec.value = v;
            data.records.push_back(std::move(rec));
        }
    }
    auto coarse = fine->with_level(GridLevel::coarse);
    GridFunction truth = sample_on_grid(coarse, [](const Vec3& x) {
        return analytic_target("f3", x);
    });
    StripOptions opt;
    opt.N = 2;
    opt.tracer = TracerConfig{0.01, 0};
    StripReport rep;
    GridFunction rec = strip_reconstruct(data, part, one, opt, &rep, &truth);
    REQUIRE(rep.layers.size() == 1);
    CHECK(rep.layers[0].rel_error < 0.30);
    CHECK(relative_error(rec, truth) == doctest::Approx(rep.layers[0].rel_error).epsilon(1e-10));
}
