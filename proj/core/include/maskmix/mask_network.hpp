#pragma once

#include <cstdint>
#include <vector>

#include "maskmix/autograd.hpp"
#include "maskmix/style_space.hpp"
#include "maskmix/tensor.hpp"

namespace maskmix {

// Two fully connected layers per sub-network: ReLU between, sigmoid after.
// W1 is hidden x channels, W2 is channels x hidden.
struct MaskSubNetParams {
    int layer_s_index = -1;  // -1 for the shared (global) sub-network
    Tensor W1, b1, W2, b2;
};

struct MaskNetworkParams {
    std::vector<MaskSubNetParams> subnets;  // one per active layer, or one shared
    bool per_layer = true;
    std::size_t hidden_width = 0;  // configured value; 0 means per-layer channel count
    std::uint64_t layout_hash = 0;
};

// Uniform Glorot weights (+-sqrt(6/(fan_in+fan_out))), zero biases, so the
// initial mask is 0.5 everywhere at delta = 0. Deterministic per seed.
// hidden_width 0 sizes each hidden layer to its own layer's channel count.
// per_layer false builds one shared sub-network sized to the widest active
// layer; narrower layers are zero-padded on input and truncated on output.
MaskNetworkParams init_mask_network(const StyleLayout& layout, std::size_t hidden_width,
                                    std::uint64_t seed, bool per_layer = true);

// m = concat over active layers of sigmoid(W2 relu(W1 ds_i + b1) + b2),
// length active_dims. delta_full is the full-dimensional code difference.
Tensor mask_forward(const MaskNetworkParams& params, const StyleLayout& layout,
                    const Tensor& delta_full);

// Channel-wise mixing: m ts + (1 - m) ss on active channels, source
// elsewhere. m is per active channel; the convex-combination form is kept
// literally so m = 0 and m = 1 reproduce the inputs exactly.
StyleCode mix(const StyleCode& s_s, const StyleCode& s_t, const Tensor& m);

// Parameter blocks in canonical order (subnets ascending; W1, b1, W2, b2).
// The same order is used for tape inputs, Adam state, and checkpoints.
std::vector<Tensor*> param_blocks(MaskNetworkParams& params);
std::vector<const Tensor*> param_blocks(const MaskNetworkParams& params);

// Taped mirror of the network: parameters placed once per tape so that every
// forward pass on that tape (main and cycle) shares the same nodes and their
// gradients accumulate.
struct TapedMaskNetwork {
    struct Subnet {
        Var W1, b1, W2, b2;
    };
    std::vector<Subnet> subnets;
    const MaskNetworkParams* params = nullptr;
};

TapedMaskNetwork put_on_tape(Tape& tape, const MaskNetworkParams& params);
std::vector<Var> taped_param_blocks(const TapedMaskNetwork& net);

Var mask_forward(Tape& tape, const TapedMaskNetwork& net, const StyleLayout& layout,
                 Var delta_full);

// Taped mixing as s_s + m (s_t - s_s) on active channels (equal to the
// convex form up to rounding; its gradient w.r.t. m is exactly s_t - s_s).
Var mix_active(Tape& tape, Var s_s_full, Var s_t_full, Var m, const StyleLayout& layout);

}  // namespace maskmix
