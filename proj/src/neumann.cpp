#include "geoxray/neumann.hpp"

namespace geoxray {

NeumannResult reconstruct(const XRayDataSet& data, const Region& region, int N, double delta,
                          const SpeedField& field, const GridFunction* truth,
                          const KrylovOptions& krylov) {
    if (N < 0) throw ConfigError("reconstruct: N must be >= 0");

    NormalOperator op(region.fine, field, data.records, delta);
    GeodesicIndex idx(region.coarse, data.records, region.eps);

    NeumannResult out;
    KrylovReport rep;

    auto solve_from_values = [&](const std::vector<double>& values) {
        GridFunction lam = backproject_values(values, idx, region.coarse, &out.empty_nodes);
        GridFunction u = op.solve_regularized(prolong_Pstar(lam), krylov, &rep);
        out.krylov_iterations += rep.iterations;
        return restrict_P(u);
    };

    std::vector<double> data_values(data.records.size());
    for (std::size_t r = 0; r < data_values.size(); ++r)
        data_values[r] = data.records[r].value;

    GridFunction term = solve_from_values(data_values);
    GridFunction sum = term;
    out.partials.push_back(sum);
    if (truth) out.errors.push_back(relative_error(sum, *truth));

    double prev_inc = term.norm2();
    int growth_streak = 0;
    for (int n = 1; n <= N; ++n) {
        // K term = term - P solve(P* Lambda(I term))
        Eigen::VectorXd sim = op.apply_A(op.forward_matrix().to_vector(prolong_Pstar(term)));
        std::vector<double> sim_values(sim.data(), sim.data() + sim.size());
        GridFunction corr = solve_from_values(sim_values);
        for (std::size_t m = 0; m < term.values.size(); ++m) term.values[m] -= corr.values[m];

        double inc = term.norm2();
        growth_streak = (prev_inc > 0.0 && inc > 2.0 * prev_inc) ? growth_streak + 1 : 0;
        if (growth_streak >= 2)
            throw DivergenceDetected("neumann series increments growing, ||K|| >= 1 suspected");
        prev_inc = inc;

        for (std::size_t m = 0; m < sum.values.size(); ++m) sum.values[m] += term.values[m];
        out.partials.push_back(sum);
        if (truth) out.errors.push_back(relative_error(sum, *truth));
    }

    out.f = sum;
    return out;
}

} // namespace geoxray
