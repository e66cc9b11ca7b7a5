#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maskmix/reenact.hpp"
#include "maskmix/trainer.hpp"

namespace maskmix {

// Evaluation battery over sampled source/target pairs, plus the recovery
// score that compares the learned mask against the world's hidden channel
// partition.

struct MaskRecovery {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double threshold = 0.5;
    std::vector<double> mean_mask;       // per active position, averaged over pairs
    std::vector<std::size_t> predicted;  // active positions voted take-from-target
};

// Averages the mask over random pairs and scores the over-threshold set
// against pose plus expression channels. Only semantically live positions
// enter the vote: nuisance channels receive exactly zero gradient, so their
// mask values are frozen at initialization and carry no information.
MaskRecovery mask_recovery(const Checkpoint& checkpoint, const SurrogateWorld& world,
                           std::size_t n_pairs, std::uint64_t seed, double threshold = 0.5);

// Gaussian Frechet distance between two sample sets (rows of equal length,
// at least two per set): |mu_a - mu_b|^2 + tr(Sa + Sb - 2 (Sa Sb)^{1/2}),
// with unbiased covariances and the matrix square root taken through the
// symmetric eigendecomposition of Sa^{1/2} Sb Sa^{1/2}.
double frechet_distance(const std::vector<Tensor>& feats_a, const std::vector<Tensor>& feats_b);

struct EvalOptions {
    std::size_t n_pairs = 500;
    std::uint64_t seed = 0;
    MaskProbe probe = MaskProbe::none;
    bool self_pairs = false;  // target = source; degenerate identity check
};

struct MetricsReport {
    double csim = 0.0;      // mean cosine similarity of source vs output identity
    double pose_err = 0.0;  // mean absolute yaw/pitch/roll difference vs target, degrees
    double expr_err = 0.0;  // mean absolute expression-coefficient difference vs target
    double nme = 0.0;       // 100 x mean landmark distance / ground-truth bbox diagonal
    double frechet = 0.0;   // reenacted vs fresh identity features
    MaskRecovery mask_recovery;
    std::size_t n_pairs = 0;
    std::uint64_t seed = 0;
    MaskProbe probe = MaskProbe::none;
    bool self_pairs = false;
    std::uint64_t world_digest = 0;
    std::uint64_t checkpoint_digest = 0;
    std::vector<std::string> conventions;  // reduction and normalizer choices, spelled out
};

// Pure function of (checkpoint, world, options): identical inputs give an
// identical report. Pair k draws its codes from a seed derived from
// (options.seed, k), so the result does not depend on evaluation order.
MetricsReport evaluate(const Checkpoint& checkpoint, const SurrogateWorld& world,
                       const EvalOptions& options = {});

}  // namespace maskmix
