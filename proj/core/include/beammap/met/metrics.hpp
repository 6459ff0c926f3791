#pragma once

#include <complex>
#include <vector>

#include "beammap/nn/tensor.hpp"
#include "beammap/sim/geometry.hpp"

namespace beammap::met {

double mean_error(const std::vector<sim::Vec2>& truth, const std::vector<sim::Vec2>& pred);

// Nearest-rank 95th percentile: sorted[ceil(0.95 * n) - 1].
double percentile95(std::vector<double> errors);

// Neighborhood-preservation scores between the true point set and its
// low-distortion reconstruction, both in R^2. k must satisfy 2k < n-1.
// Distance ties rank by index, so results are deterministic.
//
// trustworthiness penalizes points that intrude into a predicted
// neighborhood; continuity penalizes true neighbors that go missing. The two
// are intentionally separate implementations: swapping the argument order of
// one must reproduce the other, and tests rely on that duality.
double trustworthiness(const std::vector<sim::Vec2>& truth, const std::vector<sim::Vec2>& pred,
                       std::size_t k);
double continuity(const std::vector<sim::Vec2>& truth, const std::vector<sim::Vec2>& pred,
                  std::size_t k);

// Normalized reconstruction error between two maps of identical shape,
// optionally restricted to a row subset. Both maps are shifted and scaled by
// the true map's min/max before comparison; a constant true map is rejected.
// Returns {sum((p-t)^2)/sum(t^2), sqrt(mean((p-t)^2))}.
struct MapError {
    double nmse = 0.0;
    double rmse = 0.0;
};
MapError map_error(const nn::Tensor& pred, const nn::Tensor& truth,
                   const std::vector<std::size_t>& rows = {});

// Shannon capacity of a beamformed link: log2(1 + p_t |h^H w|^2 / sigma_n2).
double capacity(const std::vector<std::complex<double>>& h,
                const std::vector<std::complex<double>>& w, double p_t, double sigma_n2);

}  // namespace beammap::met
