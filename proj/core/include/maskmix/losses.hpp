#pragma once

#include <cstdint>
#include <utility>

#include "maskmix/autograd.hpp"
#include "maskmix/face_model.hpp"
#include "maskmix/mask_network.hpp"
#include "maskmix/reenact.hpp"
#include "maskmix/style_space.hpp"
#include "maskmix/surrogate_world.hpp"
#include "maskmix/tensor.hpp"

namespace maskmix {

// Training objective: a weighted shape + identity reenactment term, plus an
// optional recurrent cycle term that re-reenacts both the source and the
// reenacted code toward a second target and penalizes disagreement.

struct LossWeights {
    double lambda_x = 1.0;   // shape terms
    double lambda_id = 1.0;  // identity terms
};

struct LossBreakdown {
    double shape = 0.0;           // mean L1 over 3N landmark coordinates
    double identity = 0.0;        // 1 - cos(f_s, f_r)
    double reenactment = 0.0;     // lambda_x shape + lambda_id identity
    double cycle_shape = 0.0;     // two mean-L1 terms vs the second target
    double cycle_identity = 0.0;  // three pairwise 1 - cos terms
    double cycle = 0.0;           // lambda_x cycle_shape + lambda_id cycle_identity
    double total = 0.0;           // reenactment + cycle
};

void check_weights(const LossWeights& weights);

// Mean absolute difference over all 3N coordinates; 0 iff equal.
double shape_loss(const Landmarks3D& predicted, const Landmarks3D& target);

// 1 - cosine similarity in [0, 2]; inputs must be unit within 1e-6.
double identity_loss(const Tensor& f_a, const Tensor& f_b);

LossBreakdown reenactment_loss(const LossWeights& weights, const Landmarks3D& x_r,
                               const Landmarks3D& x_gt, const Tensor& f_s, const Tensor& f_r);

// Re-reenactment codes toward the second target t2: the first mixes source
// and t2 under a fresh mask of (s_s - s_t2); the second mixes the already
// reenacted code and t2 under a fresh mask of (s_r - s_t2).
std::pair<StyleCode, StyleCode> cycle_codes(const MaskNetworkParams& model,
                                            const StyleCode& s_s, const StyleCode& s_r,
                                            const StyleCode& s_t2);

LossBreakdown cycle_loss(const LossWeights& weights, const SurrogateWorld& world,
                         const MaskNetworkParams& model, const StyleCode& s_s,
                         const StyleCode& s_r, const StyleCode& s_t2);

struct LossCounters {
    std::uint64_t main_passes = 0;
    std::uint64_t cycle_passes = 0;
};

// Whole per-pair objective, evaluated without a tape. Reference path for
// gradient checks and probes; s_t2 == nullptr skips the cycle branch
// entirely. With a rotation, masking and mixing run in the rotated basis
// and results are rotated back before the world reads them; supervision
// semantics always come from the unrotated codes.
LossBreakdown pair_loss(const LossWeights& weights, const SurrogateWorld& world,
                        const MaskNetworkParams& model, const StyleCode& s_s,
                        const StyleCode& s_t, const StyleCode* s_t2,
                        const ActiveRotation* rotation = nullptr,
                        LossCounters* counters = nullptr);

// Taped per-pair objective. The mask network enters through `net`, so main
// and cycle passes share one set of parameter nodes; supervision targets
// (ground-truth landmarks, source identity) are constants. `terms` captures
// the forward values for logging.
struct TapedPairLoss {
    Var total{};
    LossBreakdown terms;
};
TapedPairLoss pair_loss(Tape& tape, const LossWeights& weights, const TapedWorld& tw,
                        const TapedMaskNetwork& net, const StyleCode& s_s,
                        const StyleCode& s_t, const StyleCode* s_t2,
                        const ActiveRotation* rotation = nullptr,
                        LossCounters* counters = nullptr);

}  // namespace maskmix
