#include "helpers.hpp"

#include <doctest.h>

#include <random>

using namespace geoxray;
using testing::ball;

TEST_CASE("constant field") {
    auto c = SpeedField::constant(2.0);
    CHECK(c.value(Vec3(0.3, 0.1, 0.9)) == 2.0);
    CHECK(c.gradient(Vec3(0.3, 0.1, 0.9)).norm() == 0.0);
    CHECK(c.hessian(Vec3(0.3, 0.1, 0.9)).norm() == 0.0);
}

TEST_CASE("affine field is exact") {
    auto c = SpeedField::analytic("affine", {10.0, 0.1, 0.1, 0.1});
    Vec3 x(0.2, 0.7, 0.4);
    CHECK(c.value(x) == doctest::Approx(10.0 + 0.1 * (x[0] + x[1] + x[2])).epsilon(1e-15));
    CHECK((c.gradient(x) - Vec3(0.1, 0.1, 0.1)).norm() < 1e-15);
    CHECK(c.hessian(x).norm() == 0.0);
}

TEST_CASE("analytic gradients and hessians match central differences") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(0.2, 0.8);
    for (const auto& [id, params] :
         {std::pair<std::string, std::vector<double>>{"radial_cos", {1.0, 0.3, 0.5, 0.5, 0.5}},
          {"sin3", {1.0, 0.2}}}) {
        auto c = SpeedField::analytic(id, params);
        const double h = 1e-5;
        for (int t = 0; t < 20; ++t) {
            Vec3 x(uni(rng), uni(rng), uni(rng));
            for (int k = 0; k < 3; ++k) {
                Vec3 e = Vec3::Zero();
                e[k] = h;
                double fd = (c.value(x + e) - c.value(x - e)) / (2.0 * h);
                CHECK(c.gradient(x)[k] == doctest::Approx(fd).epsilon(1e-6));
                Vec3 gfd = (c.gradient(x + e) - c.gradient(x - e)) / (2.0 * h);
                CHECK((c.hessian(x).col(k) - gfd).norm() < 1e-5);
            }
        }
    }
}

TEST_CASE("gridded field reproduces trilinear functions exactly") {
    auto f = [](const Vec3& x) {
        return 4.0 + 2.0 * x[0] - x[1] + 0.5 * x[2] + 3.0 * x[0] * x[1] - x[1] * x[2] +
               0.25 * x[0] * x[1] * x[2];
    };
    Idx3 dims(9, 9, 9);
    Vec3 origin(0.0, 0.0, 0.0), spacing(0.125, 0.125, 0.125);
    std::vector<double> vals(9 * 9 * 9);
    for (int k = 0; k < 9; ++k)
        for (int j = 0; j < 9; ++j)
            for (int i = 0; i < 9; ++i)
                vals[i + 9 * (j + 9 * k)] = f(origin + Vec3(i, j, k).cwiseProduct(spacing));
    auto c = SpeedField::gridded(origin, spacing, dims, vals);

    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> uni(0.05, 0.95);
    for (int t = 0; t < 50; ++t) {
        Vec3 x(uni(rng), uni(rng), uni(rng));
        CHECK(c.value(x) == doctest::Approx(f(x)).epsilon(1e-13));
    }
    CHECK_THROWS_AS(c.value(Vec3(1.5, 0.5, 0.5)), OutOfBounds);
}

TEST_CASE("resampled analytic field agrees at nodes and nearby") {
    auto c = SpeedField::analytic("radial_cos", {1.0, 0.3, 0.5, 0.5, 0.5});
    auto g = c.resampled(Vec3(0.0, 0.0, 0.0), Vec3::Constant(0.02), Idx3(51, 51, 51));
    CHECK(g.value(Vec3(0.5, 0.5, 0.5)) == doctest::Approx(c.value(Vec3(0.5, 0.5, 0.5))));
    CHECK(g.value(Vec3(0.31, 0.47, 0.62)) ==
          doctest::Approx(c.value(Vec3(0.31, 0.47, 0.62))).epsilon(1e-3));
    CHECK((g.gradient(Vec3(0.31, 0.47, 0.62)) - c.gradient(Vec3(0.31, 0.47, 0.62))).norm() < 1e-2);
}

TEST_CASE("hamiltonian and on-shell normalization") {
    auto c = SpeedField::analytic("radial_cos", {1.0, 0.3, 0.5, 0.5, 0.5});
    PhasePoint p = on_shell(c, Vec3(0.3, 0.55, 0.5), Vec3(0.2, -1.0, 0.4));
    CHECK(std::abs(hamiltonian(c, p)) < 1e-15);
    CHECK(c.value(p.x) * p.xi.norm() == doctest::Approx(1.0).epsilon(1e-14));

    auto one = SpeedField::constant(1.0);
    PhasePoint q{Vec3(0.5, 0.5, 0.5), Vec3(1.0, 0.0, 0.0)};
    CHECK(hamiltonian(one, q) == doctest::Approx(0.0));
}

TEST_CASE("inflow classification") {
    Domain dom = ball();
    auto c = SpeedField::constant(1.0);
    Vec3 bd = dom.center + Vec3(dom.radius, 0.0, 0.0);
    CHECK(is_inflow(dom, c, {bd, Vec3(-1.0, 0.0, 0.0)}));
    CHECK_FALSE(is_inflow(dom, c, {bd, Vec3(1.0, 0.0, 0.0)}));
    CHECK_FALSE(is_inflow(dom, c, {bd, Vec3(0.0, 1.0, 0.0)})); // tangential
    CHECK_THROWS_AS(is_inflow(dom, c, {dom.center, Vec3(1.0, 0.0, 0.0)}), NotOnBoundary);
}
