#include "geoxray/io.hpp"
#include "geoxray/neumann.hpp"
#include "helpers.hpp"

#include <doctest.h>

using namespace geoxray;
using testing::ball;

namespace {

NeumannResult run_recon(const std::string& target, int N, double noise = 0.0) {
    Domain dom = ball();
    auto c = SpeedField::constant(1.0);
    auto fine = Grid::make_ball(dom, 0.08);
    Region region = Region::make(fine);
    XRayDataSet data = testing::axis_chords(dom, c, 14, TracerConfig{0.0025, 0},
                                            [&](const Vec3& x) {
                                                return analytic_target(target, x);
                                            });
    if (noise > 0.0) {
        std::vector<double> vals(data.records.size());
        for (std::size_t i = 0; i < vals.size(); ++i) vals[i] = data.records[i].value;
        add_relative_noise(vals, noise, 99);
        for (std::size_t i = 0; i < vals.size(); ++i) data.records[i].value = vals[i];
    }
    GridFunction truth = sample_on_grid(region.coarse, [&](const Vec3& x) {
        return analytic_target(target, x);
    });
    return reconstruct(data, region, N, 0.2, c, &truth);
}

} // namespace

TEST_CASE("series terms reduce the error monotonically") {
    NeumannResult res = run_recon("f1", 3);
    REQUIRE(res.errors.size() == 4);
    for (std::size_t n = 1; n < res.errors.size(); ++n) CHECK(res.errors[n] < res.errors[n - 1]);
    CHECK(res.errors.back() < 0.25);
    CHECK(res.empty_nodes == 0);
    REQUIRE(res.partials.size() == 4);
    for (std::size_t n = 0; n < res.f.values.size(); ++n)
        CHECK(res.f[n] == res.partials.back()[n]);
}

TEST_CASE("zero data reconstructs zero") {
    Domain dom = ball();
    auto c = SpeedField::constant(1.0);
    auto fine = Grid::make_ball(dom, 0.1);
    Region region = Region::make(fine);
    XRayDataSet data = testing::axis_chords(dom, c, 8, TracerConfig{0.01, 0});
    NeumannResult res = reconstruct(data, region, 2, 0.2, c);
    CHECK(res.f.norm2() <= 1e-10);
}

TEST_CASE("moderate noise degrades the terminal error gracefully") {
    NeumannResult clean = run_recon("f1", 2);
    NeumannResult noisy = run_recon("f1", 2, 0.05);
    CHECK(noisy.errors.back() < clean.errors.back() + 0.10);
}
