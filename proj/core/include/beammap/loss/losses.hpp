#pragma once

#include <array>
#include <vector>

#include "beammap/nn/graph.hpp"
#include "beammap/nn/rng.hpp"

namespace beammap::loss {

struct LossWeights {
    double lambda_c = 0.01;  // coarse anchor
    double lambda_t = 1.0;   // temporal contrast
    double lambda_d = 50.0;  // motion smoothness
};

// Mean Euclidean distance between predicted and coarse positions, both (L, 2).
nn::Var loss_coarse(nn::Graph& g, nn::Var phat, const nn::Tensor& coarse);

// KL divergence sum_l sum_k p * ln(p / r) between the fixed sharpened target
// and the soft assignment (natural log, summed over all entries). r is
// clamped at 1e-12 before the log; entries with p == 0 contribute zero.
nn::Var loss_selftrain(nn::Graph& g, nn::Var soft, const nn::Tensor& target);

// Anchor/close/far index triple over one trajectory's timestamps.
struct Triplet {
    std::size_t anchor, close, far;
};

// All (anchor, close, far) with 0 < |t_a - t_c| <= window < |t_a - t_f|.
std::vector<Triplet> build_triplets(const std::vector<double>& timestamps, double window);

// Deterministic subsample without replacement when more than max_count.
std::vector<Triplet> subsample_triplets(std::vector<Triplet> triplets, std::size_t max_count,
                                        nn::Rng& rng);

// Hinge over position distances, averaged across triplets:
//   max(0, |p_a - p_c| - |p_a - p_f| + margin)
nn::Var loss_triplet(nn::Graph& g, nn::Var phat, const std::vector<Triplet>& triplets,
                     double margin);

// Mean squared norm of the discrete second difference of the track,
// normalized by the L-2 interior points. Fewer than 3 rows has no interior
// point and scores 0.
nn::Var loss_dynamics(nn::Graph& g, nn::Var phat);

// Denoising + commitment. Per row: |noise - noise_hat|^2 plus the commitment
// |zhat - sg(zq)|^2, averaged over rows. When the codebook learns through
// gradients instead of EMA statistics, the stop-gradient swaps sides:
// |sg(zhat) - zq|^2, which pushes the table rows instead of the encoder.
nn::Var loss_recon(nn::Graph& g, const nn::Tensor& noise, nn::Var noise_hat, nn::Var zhat,
                   nn::Var zq, bool ema_codebook);

// s + r + lambda_c * c + lambda_t * t + lambda_d * d. Throws std::runtime_error
// naming the first non-finite component.
nn::Var loss_total(nn::Graph& g, nn::Var s, nn::Var r, nn::Var c, nn::Var t, nn::Var d,
                   const LossWeights& w);

}  // namespace beammap::loss
