#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "maskmix/tensor.hpp"

namespace maskmix {

enum class LayerKind { conv, toRGB };

struct LayerSpec {
    int s_index = 0;
    int resolution = 0;  // pixels per side; informational
    LayerKind kind = LayerKind::conv;
    std::size_t channels = 0;
};

// Layered structure of the style space: ordered layers plus the subset the
// mask covers. Active layers are always conv layers. Offsets and the
// active-to-flat index map are derived at construction; treat instances as
// immutable afterwards (everything downstream binds to `hash`).
struct StyleLayout {
    std::string name;
    std::vector<LayerSpec> layers;
    std::vector<std::size_t> active_layers;  // positions into layers, ascending

    std::vector<std::size_t> offsets;  // flat offset of each layer's segment
    std::size_t total_dims = 0;
    std::size_t active_dims = 0;
    // position in the concatenated active vector -> index in the flat code
    std::vector<std::size_t> active_to_flat;
    std::uint64_t hash = 0;

    bool is_active(std::size_t layer_pos) const;
};

// Validates and derives. Errors on empty layers, zero channel counts,
// duplicate s-indices, or active entries that are out of range or not conv.
StyleLayout make_layout(std::string name, std::vector<LayerSpec> layers,
                        std::vector<std::size_t> active_layers);

// "stylegan2-ffhq": the 26-layer 1024x1024 structure, 9088 dims total
// (6048 conv + 3040 toRGB), with the first 12 conv layers active (5632 dims).
// "toy": 4 conv layers of 16 channels, all active (64 dims).
StyleLayout builtin_layout(const std::string& name);
std::vector<std::string> builtin_layout_names();

// Flat point in the style space. The layout must outlive the code.
struct StyleCode {
    Tensor values;  // total_dims x 1
    const StyleLayout* layout = nullptr;
};

StyleCode make_code(const StyleLayout& layout, Tensor values);

// Contiguous channel segment of one layer, by position or by layer identity.
// The LayerSpec overload rejects layers that are not part of the layout.
Tensor slice(const StyleCode& code, std::size_t layer_pos);
Tensor slice(const StyleCode& code, const LayerSpec& layer);

// Source minus target, componentwise. Layouts must match (by hash).
StyleCode delta(const StyleCode& s_s, const StyleCode& s_t);

// Inverse of slicing: concatenates per-layer segments back into a code.
StyleCode assemble_code(const StyleLayout& layout, const std::vector<Tensor>& slices);

// Flat indices [offset, offset + channels) of one layer's segment.
std::vector<std::size_t> layer_flat_indices(const StyleLayout& layout, std::size_t layer_pos);

}  // namespace maskmix
