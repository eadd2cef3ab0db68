#ifndef GEOXRAY_NEUMANN_HPP
#define GEOXRAY_NEUMANN_HPP

#include "geoxray/normal.hpp"

namespace geoxray {

// Reconstruction region: one lattice seen at both grid levels, plus the
// bucket radius for the back-projections.
struct Region {
    std::shared_ptr<const Grid> fine;
    std::shared_ptr<const Grid> coarse;
    double eps;

    static Region make(std::shared_ptr<const Grid> fine, double eps = -1.0) {
        Region r;
        r.fine = fine->level() == GridLevel::fine ? fine : fine->with_level(GridLevel::fine);
        r.coarse = fine->with_level(GridLevel::coarse);
        r.eps = eps > 0.0 ? eps : 0.5 * fine->spacing();
        return r;
    }
};

struct NeumannResult {
    GridFunction f;                      // coarse partial sum after N+1 terms
    std::vector<GridFunction> partials;  // partial sums for n = 0..N
    std::vector<double> errors;          // per-term relative errors (truth given)
    std::size_t empty_nodes = 0;         // coarse nodes with no data coverage
    int krylov_iterations = 0;
};

// Truncated regularized Neumann series
//   f = sum_{n=0}^{N} K^n P (A*A - delta Lap)^{-1} P* Lambda(If),
//   K g = g - P (A*A - delta Lap)^{-1} P* Lambda(I g).
NeumannResult reconstruct(const XRayDataSet& data, const Region& region, int N, double delta,
                          const SpeedField& field, const GridFunction* truth = nullptr,
                          const KrylovOptions& krylov = {});

} // namespace geoxray

#endif
