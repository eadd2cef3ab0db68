#include "geoxray/normal.hpp"
#include "helpers.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <random>

using namespace geoxray;
using testing::ball;

namespace {

// small region: ball grid at h = 0.1 gives roughly 9^3 lattice
std::shared_ptr<const Grid> small_grid() { return Grid::make_ball(ball(), 0.1); }

XRayDataSet random_rays(const SpeedField& field, int count, unsigned seed) {
    Domain dom = ball();
    std::mt19937_64 rng(seed);
    XRayDataSet data;
    TracerConfig cfg{0.01, 0};
    while (int(data.records.size()) < count) {
        XRayRecord rec;
        rec.x0 = testing::random_inflow(dom, field, rng);
        rec.geo = trace(dom, field, rec.x0, cfg);
        if (rec.geo.exited && rec.geo.samples.size() >= 2) data.records.push_back(std::move(rec));
    }
    return data;
}

} // namespace

TEST_CASE("A and A* are adjoint to machine precision") {
    auto c = SpeedField::analytic("radial_cos", {1.0, 0.3, 0.5, 0.5, 0.5});
    auto fine = small_grid();
    XRayDataSet data = random_rays(c, 200, 17);
    NormalOperator op(fine, c, data.records, 0.2);

    std::mt19937_64 rng(23);
    std::normal_distribution<double> gauss;
    for (int t = 0; t < 20; ++t) {
        Eigen::VectorXd u(op.unknowns()), w(data.records.size());
        for (int i = 0; i < u.size(); ++i) u[i] = gauss(rng);
        for (int i = 0; i < w.size(); ++i) w[i] = gauss(rng);
        double lhs = op.apply_A(u).dot(w);
        double rhs = u.dot(op.apply_Astar(w));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(std::abs(lhs), std::abs(rhs)));
    }
}

TEST_CASE("laplacian stencil against the analytic oracle") {
    auto fine = small_grid();
    auto c = SpeedField::constant(1.0);
    NormalOperator op(fine, c, {}, 0.0);

    GridFunction u = sample_on_grid(fine, [](const Vec3& x) {
        Vec3 d = x - Vec3(0.5, 0.5, 0.5);
        return d[0] * d[0];
    });
    GridFunction lap = op.apply_laplacian(u);
    // pick a node whose whole stencil is masked
    Idx3 dims = fine->dims();
    std::size_t mid = fine->index(dims[0] / 2, dims[1] / 2, dims[2] / 2);
    CHECK(lap[mid] == doctest::Approx(2.0).epsilon(1e-8));

    GridFunction k = sample_on_grid(fine, [](const Vec3&) { return 3.0; });
    CHECK(op.apply_laplacian(k)[mid] == doctest::Approx(0.0));
}

TEST_CASE("normal operator is a dirichlet-dominated weighted average") {
    auto c = SpeedField::constant(1.0);
    auto fine = small_grid();
    XRayDataSet data = random_rays(c, 150, 31);
    NormalOperator op(fine, c, data.records, 0.0);
    GridFunction ones = sample_on_grid(fine, [](const Vec3&) { return 1.0; });
    GridFunction nu = op.apply_normal(ones);
    // weighted average of line integrals of 1 = weighted average of lengths,
    // bounded by the diameter
    for (std::size_t n = 0; n < nu.values.size(); ++n) {
        CHECK(nu[n] >= 0.0);
        CHECK(nu[n] <= 0.8 + 1e-9);
    }
}

TEST_CASE("regularized solve recovers a manufactured solution") {
    auto c = SpeedField::analytic("radial_cos", {1.0, 0.3, 0.5, 0.5, 0.5});
    auto fine = small_grid();
    XRayDataSet data = random_rays(c, 200, 41);
    NormalOperator op(fine, c, data.records, 0.2);

    GridFunction star = sample_on_grid(fine, [](const Vec3& x) {
        return 1.0 + x[0] - 0.5 * x[1] * x[2];
    });
    Eigen::VectorXd ustar = op.forward_matrix().to_vector(star);
    Eigen::VectorXd rhs = op.apply_system(ustar);
    KrylovReport rep;
    Eigen::VectorXd u = op.solve_regularized(rhs, {}, &rep);
    CHECK((u - ustar).norm() <= 1e-6 * ustar.norm());
    CHECK(rep.iterations > 0);
}

TEST_CASE("gmres against a dense direct solve") {
    const int n = 40;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> gauss;
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = gauss(rng);
    Eigen::MatrixXd M = B * B.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) rhs[i] = gauss(rng);

    KrylovOptions opt;
    opt.tol = 1e-10;
    Eigen::VectorXd x = gmres([&](const Eigen::VectorXd& v) { return M * v; }, rhs, opt, nullptr);
    Eigen::VectorXd ref = M.lu().solve(rhs);
    CHECK((x - ref).norm() <= 1e-8 * ref.norm());
}

TEST_CASE("gmres reports non-convergence") {
    const int n = 30;
    Eigen::MatrixXd M = Eigen::MatrixXd::Identity(n, n);
    M(0, 0) = 1e-14; // nearly singular
    Eigen::VectorXd rhs = Eigen::VectorXd::Ones(n);
    KrylovOptions opt;
    opt.tol = 1e-13;
    opt.max_iters = 3;
    opt.restart = 2;
    CHECK_THROWS_AS(gmres([&](const Eigen::VectorXd& v) { return M * v; }, rhs, opt, nullptr),
                    NoConvergence);
}
