#include "maskmix/mask_network.hpp"

#include "maskmix/digest.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "maskmix/errors.hpp"
#include "maskmix/rng.hpp"
#include "maskmix/tensor_ops.hpp"

namespace maskmix {

namespace {

Tensor glorot(std::size_t rows, std::size_t cols, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Tensor w(rows, cols);
    for (double& v : w.data) v = rng.uniform(-limit, limit);
    return w;
}

MaskSubNetParams init_subnet(int s_index, std::size_t channels, std::size_t hidden, Rng& rng) {
    MaskSubNetParams sub;
    sub.layer_s_index = s_index;
    sub.W1 = glorot(hidden, channels, rng);
    sub.b1 = Tensor(hidden, 1);
    sub.W2 = glorot(channels, hidden, rng);
    sub.b2 = Tensor(channels, 1);
    return sub;
}

std::size_t widest_active(const StyleLayout& layout) {
    std::size_t w = 0;
    for (std::size_t pos : layout.active_layers) {
        w = std::max(w, layout.layers[pos].channels);
    }
    return w;
}

void check_layout(const MaskNetworkParams& params, const StyleLayout& layout) {
    if (params.layout_hash != layout.hash) {
        throw MismatchError("mask network was built for a different layout (hash " +
                            to_hex(params.layout_hash) + " vs " + to_hex(layout.hash) + ")");
    }
}

std::vector<std::size_t> prefix_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

}  // namespace

MaskNetworkParams init_mask_network(const StyleLayout& layout, std::size_t hidden_width,
                                    std::uint64_t seed, bool per_layer) {
    if (layout.active_layers.empty()) {
        throw ShapeError("init_mask_network: layout has no active layers");
    }
    MaskNetworkParams params;
    params.per_layer = per_layer;
    params.hidden_width = hidden_width;
    params.layout_hash = layout.hash;
    Rng rng(seed);
    if (per_layer) {
        for (std::size_t pos : layout.active_layers) {
            const LayerSpec& l = layout.layers[pos];
            const std::size_t hidden = hidden_width == 0 ? l.channels : hidden_width;
            params.subnets.push_back(init_subnet(l.s_index, l.channels, hidden, rng));
        }
    } else {
        const std::size_t width = widest_active(layout);
        const std::size_t hidden = hidden_width == 0 ? width : hidden_width;
        params.subnets.push_back(init_subnet(-1, width, hidden, rng));
    }
    return params;
}

Tensor mask_forward(const MaskNetworkParams& params, const StyleLayout& layout,
                    const Tensor& delta_full) {
    check_layout(params, layout);
    if (!delta_full.is_vector() || delta_full.rows != layout.total_dims) {
        throw ShapeError("mask_forward: expected " + std::to_string(layout.total_dims) +
                         " values, got " + shape_str(delta_full));
    }
    Tensor m(layout.active_dims, 1);
    std::size_t out_off = 0;
    for (std::size_t a = 0; a < layout.active_layers.size(); ++a) {
        const std::size_t pos = layout.active_layers[a];
        const std::size_t ch = layout.layers[pos].channels;
        const MaskSubNetParams& sub = params.per_layer ? params.subnets[a] : params.subnets[0];
        Tensor d(sub.W1.cols, 1);  // zero padding when the shared net is wider
        for (std::size_t c = 0; c < ch; ++c) d[c] = delta_full[layout.offsets[pos] + c];
        const Tensor h = relu(add(matvec(sub.W1, d), sub.b1));
        const Tensor o = sigmoid(add(matvec(sub.W2, h), sub.b2));
        for (std::size_t c = 0; c < ch; ++c) m[out_off + c] = o[c];
        out_off += ch;
    }
    return m;
}

StyleCode mix(const StyleCode& s_s, const StyleCode& s_t, const Tensor& m) {
    if (s_s.layout == nullptr || s_t.layout == nullptr || s_s.layout->hash != s_t.layout->hash) {
        throw MismatchError("mix: style codes have different layouts");
    }
    const StyleLayout& layout = *s_s.layout;
    if (m.size() != layout.active_dims) {
        throw ShapeError("mix: mask covers " + std::to_string(m.size()) + " channels, layout has " +
                         std::to_string(layout.active_dims) + " active");
    }
    StyleCode out{s_s.values, s_s.layout};
    for (std::size_t k = 0; k < layout.active_dims; ++k) {
        const std::size_t f = layout.active_to_flat[k];
        out.values[f] = m[k] * s_t.values[f] + (1.0 - m[k]) * s_s.values[f];
    }
    return out;
}

std::vector<Tensor*> param_blocks(MaskNetworkParams& params) {
    std::vector<Tensor*> blocks;
    for (MaskSubNetParams& sub : params.subnets) {
        blocks.push_back(&sub.W1);
        blocks.push_back(&sub.b1);
        blocks.push_back(&sub.W2);
        blocks.push_back(&sub.b2);
    }
    return blocks;
}

std::vector<const Tensor*> param_blocks(const MaskNetworkParams& params) {
    std::vector<const Tensor*> blocks;
    for (const MaskSubNetParams& sub : params.subnets) {
        blocks.push_back(&sub.W1);
        blocks.push_back(&sub.b1);
        blocks.push_back(&sub.W2);
        blocks.push_back(&sub.b2);
    }
    return blocks;
}

TapedMaskNetwork put_on_tape(Tape& tape, const MaskNetworkParams& params) {
    TapedMaskNetwork net;
    net.params = &params;
    for (const MaskSubNetParams& sub : params.subnets) {
        net.subnets.push_back(TapedMaskNetwork::Subnet{
            tape.input(sub.W1),
            tape.input(sub.b1),
            tape.input(sub.W2),
            tape.input(sub.b2),
        });
    }
    return net;
}

std::vector<Var> taped_param_blocks(const TapedMaskNetwork& net) {
    std::vector<Var> blocks;
    for (const TapedMaskNetwork::Subnet& sub : net.subnets) {
        blocks.push_back(sub.W1);
        blocks.push_back(sub.b1);
        blocks.push_back(sub.W2);
        blocks.push_back(sub.b2);
    }
    return blocks;
}

Var mask_forward(Tape& tape, const TapedMaskNetwork& net, const StyleLayout& layout,
                 Var delta_full) {
    check_layout(*net.params, layout);
    if (delta_full.tape != &tape) {
        throw std::logic_error("mask_forward: delta lives on a different tape");
    }
    if (delta_full.value().rows != layout.total_dims) {
        throw ShapeError("mask_forward: expected " + std::to_string(layout.total_dims) +
                         " values, got " + shape_str(delta_full.value()));
    }
    const bool per_layer = net.params->per_layer;
    std::vector<Var> parts;
    for (std::size_t a = 0; a < layout.active_layers.size(); ++a) {
        const std::size_t pos = layout.active_layers[a];
        const std::size_t ch = layout.layers[pos].channels;
        const TapedMaskNetwork::Subnet& sub = per_layer ? net.subnets[a] : net.subnets[0];
        const std::size_t width = sub.W1.value().cols;
        Var d = gather(delta_full, layer_flat_indices(layout, pos));
        if (width != ch) d = scatter(d, prefix_indices(ch), width);
        Var h = relu(add(matvec(sub.W1, d), sub.b1));
        Var o = sigmoid(add(matvec(sub.W2, h), sub.b2));
        if (width != ch) o = gather(o, prefix_indices(ch));
        parts.push_back(o);
    }
    return parts.size() == 1 ? parts[0] : concat(parts);
}

Var mix_active(Tape& tape, Var s_s_full, Var s_t_full, Var m, const StyleLayout& layout) {
    if (s_s_full.tape != &tape || s_t_full.tape != &tape || m.tape != &tape) {
        throw std::logic_error("mix_active: operands live on a different tape");
    }
    if (s_s_full.value().rows != layout.total_dims ||
        s_t_full.value().rows != layout.total_dims) {
        throw ShapeError("mix_active: codes do not match the layout");
    }
    if (m.value().size() != layout.active_dims) {
        throw ShapeError("mix_active: mask covers " + std::to_string(m.value().size()) +
                         " channels, layout has " + std::to_string(layout.active_dims) +
                         " active");
    }
    Var s_act = gather(s_s_full, layout.active_to_flat);
    Var t_act = gather(s_t_full, layout.active_to_flat);
    Var shift = scatter(mul(m, sub(t_act, s_act)), layout.active_to_flat, layout.total_dims);
    return add(s_s_full, shift);
}

}  // namespace maskmix
