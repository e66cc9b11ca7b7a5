#include "maskmix/style_space.hpp"

#include <algorithm>
#include <set>
#include <utility>

#include "maskmix/digest.hpp"
#include "maskmix/errors.hpp"
#include "maskmix/tensor_ops.hpp"

namespace maskmix {

bool StyleLayout::is_active(std::size_t layer_pos) const {
    return std::binary_search(active_layers.begin(), active_layers.end(), layer_pos);
}

StyleLayout make_layout(std::string name, std::vector<LayerSpec> layers,
                        std::vector<std::size_t> active_layers) {
    if (layers.empty()) throw ShapeError("make_layout: no layers");
    std::set<int> seen;
    for (const LayerSpec& l : layers) {
        if (l.channels == 0) {
            throw ShapeError("make_layout: layer s" + std::to_string(l.s_index) +
                             " has zero channels");
        }
        if (!seen.insert(l.s_index).second) {
            throw ShapeError("make_layout: duplicate s_index " + std::to_string(l.s_index));
        }
    }
    std::sort(active_layers.begin(), active_layers.end());
    if (std::adjacent_find(active_layers.begin(), active_layers.end()) != active_layers.end()) {
        throw ShapeError("make_layout: duplicate active layer");
    }
    for (std::size_t pos : active_layers) {
        if (pos >= layers.size()) {
            throw ShapeError("make_layout: active layer " + std::to_string(pos) + " out of range");
        }
        if (layers[pos].kind != LayerKind::conv) {
            throw ShapeError("make_layout: active layer s" + std::to_string(layers[pos].s_index) +
                             " is not conv");
        }
    }

    StyleLayout out;
    out.name = std::move(name);
    out.layers = std::move(layers);
    out.active_layers = std::move(active_layers);
    out.offsets.reserve(out.layers.size());
    for (const LayerSpec& l : out.layers) {
        out.offsets.push_back(out.total_dims);
        out.total_dims += l.channels;
    }
    for (std::size_t pos : out.active_layers) {
        const LayerSpec& l = out.layers[pos];
        for (std::size_t c = 0; c < l.channels; ++c) {
            out.active_to_flat.push_back(out.offsets[pos] + c);
        }
        out.active_dims += l.channels;
    }

    Digest d;
    d.str("style-layout/v1");
    d.u64(out.layers.size());
    for (const LayerSpec& l : out.layers) {
        d.u64(static_cast<std::uint64_t>(l.s_index));
        d.u64(static_cast<std::uint64_t>(l.resolution));
        d.u64(l.kind == LayerKind::conv ? 0 : 1);
        d.u64(l.channels);
    }
    d.u64(out.active_layers.size());
    for (std::size_t pos : out.active_layers) d.u64(pos);
    out.hash = d.value();
    return out;
}

namespace {

StyleLayout make_ffhq_layout() {
    // StyleGAN2 1024x1024 synthesis structure: per resolution one upsampling
    // conv (absent at 4x4), one plain conv, one toRGB. Channel counts halve
    // from 512 starting at 128x128.
    struct Row {
        int res;
        LayerKind kind;
        std::size_t ch;
    };
    const Row rows[] = {
        {4, LayerKind::conv, 512},     {4, LayerKind::toRGB, 512},
        {8, LayerKind::conv, 512},     {8, LayerKind::conv, 512},
        {8, LayerKind::toRGB, 512},    {16, LayerKind::conv, 512},
        {16, LayerKind::conv, 512},    {16, LayerKind::toRGB, 512},
        {32, LayerKind::conv, 512},    {32, LayerKind::conv, 512},
        {32, LayerKind::toRGB, 512},   {64, LayerKind::conv, 512},
        {64, LayerKind::conv, 512},    {64, LayerKind::toRGB, 512},
        {128, LayerKind::conv, 512},   {128, LayerKind::conv, 256},
        {128, LayerKind::toRGB, 256},  {256, LayerKind::conv, 256},
        {256, LayerKind::conv, 128},   {256, LayerKind::toRGB, 128},
        {512, LayerKind::conv, 128},   {512, LayerKind::conv, 64},
        {512, LayerKind::toRGB, 64},   {1024, LayerKind::conv, 64},
        {1024, LayerKind::conv, 32},   {1024, LayerKind::toRGB, 32},
    };
    std::vector<LayerSpec> layers;
    int s_index = 0;
    for (const Row& r : rows) {
        layers.push_back(LayerSpec{s_index++, r.res, r.kind, r.ch});
    }
    // the first 12 conv layers, skipping the interleaved toRGB entries
    std::vector<std::size_t> active = {0, 2, 3, 5, 6, 8, 9, 11, 12, 14, 15, 17};
    return make_layout("stylegan2-ffhq", std::move(layers), std::move(active));
}

StyleLayout make_toy_layout() {
    std::vector<LayerSpec> layers;
    for (int i = 0; i < 4; ++i) {
        layers.push_back(LayerSpec{i, 4 << i, LayerKind::conv, 16});
    }
    return make_layout("toy", std::move(layers), {0, 1, 2, 3});
}

}  // namespace

std::vector<std::string> builtin_layout_names() { return {"stylegan2-ffhq", "toy"}; }

StyleLayout builtin_layout(const std::string& name) {
    if (name == "stylegan2-ffhq") return make_ffhq_layout();
    if (name == "toy") return make_toy_layout();
    std::string valid;
    for (const std::string& n : builtin_layout_names()) {
        if (!valid.empty()) valid += ", ";
        valid += n;
    }
    throw ShapeError("unknown layout '" + name + "'; valid names: " + valid);
}

StyleCode make_code(const StyleLayout& layout, Tensor values) {
    if (!values.is_vector() || values.rows != layout.total_dims) {
        throw ShapeError("make_code: expected " + std::to_string(layout.total_dims) +
                         " values, got " + shape_str(values));
    }
    return StyleCode{std::move(values), &layout};
}

Tensor slice(const StyleCode& code, std::size_t layer_pos) {
    const StyleLayout& layout = *code.layout;
    if (layer_pos >= layout.layers.size()) {
        throw ShapeError("slice: layer " + std::to_string(layer_pos) + " out of range");
    }
    const std::size_t off = layout.offsets[layer_pos];
    const std::size_t ch = layout.layers[layer_pos].channels;
    Tensor out(ch, 1);
    for (std::size_t c = 0; c < ch; ++c) out[c] = code.values[off + c];
    return out;
}

Tensor slice(const StyleCode& code, const LayerSpec& layer) {
    const StyleLayout& layout = *code.layout;
    for (std::size_t pos = 0; pos < layout.layers.size(); ++pos) {
        const LayerSpec& own = layout.layers[pos];
        if (own.s_index == layer.s_index) {
            if (own.resolution != layer.resolution || own.kind != layer.kind ||
                own.channels != layer.channels) {
                break;
            }
            return slice(code, pos);
        }
    }
    throw ShapeError("slice: layer s" + std::to_string(layer.s_index) +
                     " does not belong to layout '" + layout.name + "'");
}

StyleCode delta(const StyleCode& s_s, const StyleCode& s_t) {
    if (s_s.layout == nullptr || s_t.layout == nullptr || s_s.layout->hash != s_t.layout->hash) {
        throw MismatchError("delta: style codes have different layouts");
    }
    return StyleCode{sub(s_s.values, s_t.values), s_s.layout};
}

StyleCode assemble_code(const StyleLayout& layout, const std::vector<Tensor>& slices) {
    if (slices.size() != layout.layers.size()) {
        throw ShapeError("assemble_code: expected " + std::to_string(layout.layers.size()) +
                         " slices, got " + std::to_string(slices.size()));
    }
    Tensor values(layout.total_dims, 1);
    for (std::size_t pos = 0; pos < slices.size(); ++pos) {
        const std::size_t ch = layout.layers[pos].channels;
        if (slices[pos].size() != ch) {
            throw ShapeError("assemble_code: slice " + std::to_string(pos) + " has " +
                             std::to_string(slices[pos].size()) + " values, layer wants " +
                             std::to_string(ch));
        }
        for (std::size_t c = 0; c < ch; ++c) values[layout.offsets[pos] + c] = slices[pos][c];
    }
    return StyleCode{std::move(values), &layout};
}

std::vector<std::size_t> layer_flat_indices(const StyleLayout& layout, std::size_t layer_pos) {
    if (layer_pos >= layout.layers.size()) {
        throw ShapeError("layer_flat_indices: layer " + std::to_string(layer_pos) +
                         " out of range");
    }
    std::vector<std::size_t> idx(layout.layers[layer_pos].channels);
    for (std::size_t c = 0; c < idx.size(); ++c) idx[c] = layout.offsets[layer_pos] + c;
    return idx;
}

}  // namespace maskmix
