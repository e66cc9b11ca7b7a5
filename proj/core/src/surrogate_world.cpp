#include "maskmix/surrogate_world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "maskmix/digest.hpp"
#include "maskmix/errors.hpp"
#include "maskmix/rng.hpp"
#include "maskmix/tensor_ops.hpp"
#include "orth.hpp"

namespace maskmix {

namespace {

void fold(Digest& d, const Tensor& t) {
    d.u64(t.rows);
    d.u64(t.cols);
    d.f64s(t.data);
}

std::size_t layer_of_flat(const StyleLayout& layout, std::size_t flat) {
    for (std::size_t i = 0; i < layout.layers.size(); ++i) {
        const std::size_t off = layout.offsets[i];
        if (flat >= off && flat < off + layout.layers[i].channels) return i;
    }
    throw ShapeError("flat index " + std::to_string(flat) + " outside layout");
}

// rows(A) x total_dims map reading the given active positions from the
// rendered vector: A * Sel * G^T, written out against the layer blocks.
Tensor compose_extraction(const StyleLayout& layout, const std::vector<Tensor>& blocks,
                          const Tensor& a, const std::vector<std::size_t>& positions) {
    Tensor map(a.rows, layout.total_dims);
    for (std::size_t j = 0; j < positions.size(); ++j) {
        const std::size_t f = layout.active_to_flat[positions[j]];
        const std::size_t li = layer_of_flat(layout, f);
        const std::size_t off = layout.offsets[li];
        const Tensor& g = blocks[li];
        for (std::size_t i = 0; i < a.rows; ++i)
            for (std::size_t c = 0; c < g.rows; ++c)
                map(i, off + c) += a(i, j) * g(c, f - off);
    }
    return map;
}

void check_image(const SurrogateWorld& world, const Image& image, const char* who) {
    if (!image.values.is_vector() || image.values.rows != world.layout.total_dims)
        throw ShapeError(std::string(who) + ": image is " + shape_str(image.values) +
                         ", world renders " + std::to_string(world.layout.total_dims) +
                         " values");
    if (!all_finite(image.values))
        throw NumericError(std::string(who) + ": non-finite image");
}

void check_sorted_disjoint(const ChannelPartition& p, std::size_t active_dims) {
    const std::vector<const std::vector<std::size_t>*> lists = {
        &p.pose_channels, &p.expr_channels, &p.id_channels, &p.nuisance_channels};
    std::vector<bool> seen(active_dims, false);
    for (const auto* list : lists) {
        for (std::size_t k = 0; k < list->size(); ++k) {
            const std::size_t v = (*list)[k];
            if (v >= active_dims)
                throw MismatchError("world partition references channel " + std::to_string(v) +
                                    " beyond active_dims " + std::to_string(active_dims));
            if (k > 0 && (*list)[k - 1] >= v)
                throw MismatchError("world partition list is not sorted ascending");
            if (seen[v])
                throw MismatchError("world partition reuses channel " + std::to_string(v));
            seen[v] = true;
        }
    }
}

}  // namespace

SurrogateWorld make_world(const StyleLayout& layout, const WorldSizes& sizes,
                          std::uint64_t seed) {
    if (sizes.pose_block < 3)
        throw ShapeError("make_world: pose block needs at least 3 channels for 3 angles");
    if (sizes.expr_block < sizes.expr_dim)
        throw ShapeError("make_world: expr block smaller than expr_dim");
    if (sizes.id_block < sizes.shape_dim + sizes.id_feature_dim)
        throw ShapeError("make_world: id block must hold shape_dim + id_feature_dim channels");
    const std::size_t claimed = sizes.pose_block + sizes.expr_block + sizes.id_block;
    if (claimed > layout.active_dims)
        throw ShapeError("make_world: blocks claim " + std::to_string(claimed) +
                         " channels, layout has " + std::to_string(layout.active_dims) +
                         " active");
    if (!std::isfinite(sizes.pose_scale) || sizes.pose_scale <= 0.0)
        throw ShapeError("make_world: pose_scale must be positive and finite");

    SurrogateWorld world;
    world.layout = layout;
    world.sizes = sizes;
    world.seed = seed;
    world.pose_scale = sizes.pose_scale;

    // One sequential stream; the draw order below is part of the format.
    Rng rng(seed);

    std::vector<std::size_t> perm(layout.active_dims);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_u64() % (i + 1));
        std::swap(perm[i], perm[j]);
    }
    auto take = [&perm](std::size_t begin, std::size_t count) {
        std::vector<std::size_t> out(perm.begin() + static_cast<std::ptrdiff_t>(begin),
                                     perm.begin() + static_cast<std::ptrdiff_t>(begin + count));
        std::sort(out.begin(), out.end());
        return out;
    };
    world.partition.pose_channels = take(0, sizes.pose_block);
    world.partition.expr_channels = take(sizes.pose_block, sizes.expr_block);
    world.partition.id_channels = take(sizes.pose_block + sizes.expr_block, sizes.id_block);
    world.partition.nuisance_channels = take(claimed, layout.active_dims - claimed);

    world.render_blocks.reserve(layout.layers.size());
    for (const LayerSpec& layer : layout.layers) {
        Tensor raw(layer.channels, layer.channels);
        for (std::size_t i = 0; i < raw.rows; ++i)
            for (std::size_t j = 0; j < raw.cols; ++j) raw(i, j) = rng.normal();
        world.render_blocks.push_back(detail::orthonormal_columns(raw));
    }

    Tensor a_p = detail::random_row_orthonormal(3, sizes.pose_block, rng);
    for (double& v : a_p.data) v *= sizes.pose_scale;
    const Tensor a_e = detail::random_row_orthonormal(sizes.expr_dim, sizes.expr_block, rng);
    const Tensor a_s = detail::random_row_orthonormal(sizes.shape_dim, sizes.shape_dim, rng);
    const Tensor a_f =
        detail::random_row_orthonormal(sizes.id_feature_dim, sizes.id_feature_dim, rng);
    const std::uint64_t basis_seed = rng.next_u64();

    world.pose_map =
        compose_extraction(world.layout, world.render_blocks, a_p, world.partition.pose_channels);
    world.expr_map =
        compose_extraction(world.layout, world.render_blocks, a_e, world.partition.expr_channels);

    world.basis =
        make_basis(sizes.landmark_count, sizes.shape_dim, sizes.expr_dim, basis_seed);

    std::vector<std::size_t> shape_sub(world.partition.id_channels.begin(),
                                       world.partition.id_channels.begin() +
                                           static_cast<std::ptrdiff_t>(sizes.shape_dim));
    std::vector<std::size_t> feature_sub(
        world.partition.id_channels.begin() + static_cast<std::ptrdiff_t>(sizes.shape_dim),
        world.partition.id_channels.begin() +
            static_cast<std::ptrdiff_t>(sizes.shape_dim + sizes.id_feature_dim));
    world.shape_map = compose_extraction(world.layout, world.render_blocks, a_s, shape_sub);
    world.id_map = compose_extraction(world.layout, world.render_blocks, a_f, feature_sub);

    world.digest = world_digest(world);
    return world;
}

std::uint64_t world_digest(const SurrogateWorld& world) {
    Digest d;
    d.str("surrogate-world/v1");
    d.u64(world.layout.hash);
    d.u64(world.seed);
    d.u64(world.sizes.landmark_count);
    d.u64(world.sizes.shape_dim);
    d.u64(world.sizes.expr_dim);
    d.u64(world.sizes.id_feature_dim);
    d.f64(world.sizes.pose_scale);
    d.u64(world.sizes.pose_block);
    d.u64(world.sizes.expr_block);
    d.u64(world.sizes.id_block);
    for (const auto* list : {&world.partition.pose_channels, &world.partition.expr_channels,
                             &world.partition.id_channels, &world.partition.nuisance_channels}) {
        d.u64(list->size());
        for (std::size_t v : *list) d.u64(v);
    }
    d.u64(world.render_blocks.size());
    for (const Tensor& b : world.render_blocks) fold(d, b);
    fold(d, world.pose_map);
    fold(d, world.expr_map);
    fold(d, world.shape_map);
    fold(d, world.id_map);
    d.u64(world.basis.landmark_count);
    fold(d, world.basis.mean_shape);
    fold(d, world.basis.shape_basis);
    fold(d, world.basis.expr_basis);
    d.f64(world.pose_scale);
    return d.value();
}

void check_world(const SurrogateWorld& world) {
    const StyleLayout& layout = world.layout;
    const WorldSizes& sizes = world.sizes;
    if (layout.layers.empty()) throw MismatchError("world has an empty layout");
    if (sizes.pose_block < 3 || sizes.expr_block < sizes.expr_dim ||
        sizes.id_block < sizes.shape_dim + sizes.id_feature_dim)
        throw MismatchError("world block sizes violate the construction minimums");
    if (world.partition.pose_channels.size() != sizes.pose_block ||
        world.partition.expr_channels.size() != sizes.expr_block ||
        world.partition.id_channels.size() != sizes.id_block)
        throw MismatchError("world partition does not match the declared block sizes");
    const std::size_t total = world.partition.pose_channels.size() +
                              world.partition.expr_channels.size() +
                              world.partition.id_channels.size() +
                              world.partition.nuisance_channels.size();
    if (total != layout.active_dims)
        throw MismatchError("world partition covers " + std::to_string(total) + " of " +
                            std::to_string(layout.active_dims) + " active channels");
    check_sorted_disjoint(world.partition, layout.active_dims);
    if (world.render_blocks.size() != layout.layers.size())
        throw MismatchError("world has " + std::to_string(world.render_blocks.size()) +
                            " render blocks for " + std::to_string(layout.layers.size()) +
                            " layers");
    for (std::size_t i = 0; i < layout.layers.size(); ++i) {
        const Tensor& b = world.render_blocks[i];
        if (b.rows != layout.layers[i].channels || b.cols != layout.layers[i].channels)
            throw MismatchError("render block " + std::to_string(i) + " is " + shape_str(b) +
                                ", layer has " + std::to_string(layout.layers[i].channels) +
                                " channels");
        if (!all_finite(b)) throw MismatchError("render block " + std::to_string(i) +
                                                " has non-finite entries");
    }
    auto check_map = [&](const Tensor& m, std::size_t rows, const char* name) {
        if (m.rows != rows || m.cols != layout.total_dims)
            throw MismatchError(std::string(name) + " is " + shape_str(m) + ", expected " +
                                std::to_string(rows) + "x" + std::to_string(layout.total_dims));
        if (!all_finite(m))
            throw MismatchError(std::string(name) + " has non-finite entries");
    };
    check_map(world.pose_map, 3, "pose map");
    check_map(world.expr_map, sizes.expr_dim, "expr map");
    check_map(world.shape_map, sizes.shape_dim, "shape map");
    check_map(world.id_map, sizes.id_feature_dim, "id map");
    if (world.basis.landmark_count != sizes.landmark_count ||
        world.basis.mean_shape.rows != 3 * sizes.landmark_count ||
        world.basis.shape_basis.cols != sizes.shape_dim ||
        world.basis.expr_basis.cols != sizes.expr_dim)
        throw MismatchError("world basis does not match the declared sizes");
    if (world.pose_scale != sizes.pose_scale)
        throw MismatchError("world stores two different pose scales");
}

StyleCode sample_code(const SurrogateWorld& world, std::uint64_t seed) {
    Rng rng(seed);
    Tensor values(world.layout.total_dims, 1);
    for (double& v : values.data) v = rng.normal();
    return make_code(world.layout, std::move(values));
}

Image render(const SurrogateWorld& world, const StyleCode& s) {
    if (s.layout == nullptr || s.layout->hash != world.layout.hash)
        throw MismatchError("render: style code belongs to a different layout");
    if (!all_finite(s.values)) throw NumericError("render: non-finite style code");
    Image out{Tensor(world.layout.total_dims, 1)};
    for (std::size_t li = 0; li < world.layout.layers.size(); ++li) {
        const std::size_t off = world.layout.offsets[li];
        const Tensor& g = world.render_blocks[li];
        for (std::size_t i = 0; i < g.rows; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < g.cols; ++j) acc += g(i, j) * s.values[off + j];
            out.values[off + i] = acc;
        }
    }
    return out;
}

StyleCode unrender(const SurrogateWorld& world, const Image& image) {
    check_image(world, image, "unrender");
    Tensor values(world.layout.total_dims, 1);
    for (std::size_t li = 0; li < world.layout.layers.size(); ++li) {
        const std::size_t off = world.layout.offsets[li];
        const Tensor& g = world.render_blocks[li];
        for (std::size_t j = 0; j < g.cols; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < g.rows; ++i) acc += g(i, j) * image.values[off + i];
            values[off + j] = acc;
        }
    }
    return make_code(world.layout, std::move(values));
}

PoseAngles extract_pose(const SurrogateWorld& world, const Image& image) {
    check_image(world, image, "extract_pose");
    const Tensor v = matvec(world.pose_map, image.values);
    return PoseAngles{v[0], v[1], v[2]};
}

Tensor extract_expr(const SurrogateWorld& world, const Image& image) {
    check_image(world, image, "extract_expr");
    return matvec(world.expr_map, image.values);
}

Tensor extract_shape(const SurrogateWorld& world, const Image& image) {
    check_image(world, image, "extract_shape");
    return matvec(world.shape_map, image.values);
}

Tensor extract_identity(const SurrogateWorld& world, const Image& image) {
    check_image(world, image, "extract_identity");
    return normalize(matvec(world.id_map, image.values));
}

Landmarks3D landmarks(const SurrogateWorld& world, const Image& image) {
    return rotate(reconstruct(world.basis,
                              ShapeParams{extract_shape(world, image), extract_expr(world, image)}),
                  extract_pose(world, image));
}

CodeSemantics extract_all(const SurrogateWorld& world, const Image& image) {
    return CodeSemantics{extract_pose(world, image), extract_expr(world, image),
                         extract_shape(world, image), extract_identity(world, image)};
}

std::vector<std::size_t> shape_subchannels(const SurrogateWorld& world) {
    const auto& id = world.partition.id_channels;
    return {id.begin(), id.begin() + static_cast<std::ptrdiff_t>(world.sizes.shape_dim)};
}

std::vector<std::size_t> feature_subchannels(const SurrogateWorld& world) {
    const auto& id = world.partition.id_channels;
    const auto begin = id.begin() + static_cast<std::ptrdiff_t>(world.sizes.shape_dim);
    return {begin, begin + static_cast<std::ptrdiff_t>(world.sizes.id_feature_dim)};
}

std::vector<std::size_t> semantic_channels(const SurrogateWorld& world) {
    std::vector<std::size_t> out = world.partition.pose_channels;
    const auto& expr = world.partition.expr_channels;
    out.insert(out.end(), expr.begin(), expr.end());
    const auto shape_sub = shape_subchannels(world);
    out.insert(out.end(), shape_sub.begin(), shape_sub.end());
    const auto feature_sub = feature_subchannels(world);
    out.insert(out.end(), feature_sub.begin(), feature_sub.end());
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> partition_labels(const ChannelPartition& partition,
                                          std::size_t active_dims) {
    std::vector<std::string> labels(active_dims, "unassigned");
    auto paint = [&labels, active_dims](const std::vector<std::size_t>& list, const char* name) {
        for (std::size_t v : list)
            if (v < active_dims) labels[v] = name;
    };
    paint(partition.pose_channels, "pose");
    paint(partition.expr_channels, "expr");
    paint(partition.id_channels, "id");
    paint(partition.nuisance_channels, "nuisance");
    return labels;
}

Tensor dense_render_map(const SurrogateWorld& world) {
    Tensor g(world.layout.total_dims, world.layout.total_dims);
    for (std::size_t li = 0; li < world.layout.layers.size(); ++li) {
        const std::size_t off = world.layout.offsets[li];
        const Tensor& b = world.render_blocks[li];
        for (std::size_t i = 0; i < b.rows; ++i)
            for (std::size_t j = 0; j < b.cols; ++j) g(off + i, off + j) = b(i, j);
    }
    return g;
}

TapedWorld put_on_tape(Tape& tape, const SurrogateWorld& world) {
    TapedWorld tw;
    tw.world = &world;
    tw.render_blocks.reserve(world.render_blocks.size());
    for (const Tensor& b : world.render_blocks) tw.render_blocks.push_back(tape.constant(b));
    tw.pose_map = tape.constant(world.pose_map);
    tw.expr_map = tape.constant(world.expr_map);
    tw.shape_map = tape.constant(world.shape_map);
    tw.id_map = tape.constant(world.id_map);
    tw.mean_shape = tape.constant(world.basis.mean_shape);
    tw.shape_basis = tape.constant(world.basis.shape_basis);
    tw.expr_basis = tape.constant(world.basis.expr_basis);
    return tw;
}

namespace {

void check_taped(Tape& tape, const TapedWorld& tw, Var v, const char* who) {
    if (tw.world == nullptr) throw std::logic_error(std::string(who) + ": world not on tape");
    if (v.tape != &tape || tw.pose_map.tape != &tape)
        throw std::logic_error(std::string(who) + ": operands live on a different tape");
}

}  // namespace

Var render(Tape& tape, const TapedWorld& tw, Var code_full) {
    check_taped(tape, tw, code_full, "render");
    const StyleLayout& layout = tw.world->layout;
    const Tensor& v = code_full.value();
    if (!v.is_vector() || v.rows != layout.total_dims)
        throw ShapeError("render: code is " + shape_str(v) + ", layout has " +
                         std::to_string(layout.total_dims) + " dims");
    std::vector<Var> parts;
    parts.reserve(layout.layers.size());
    for (std::size_t li = 0; li < layout.layers.size(); ++li) {
        std::vector<std::size_t> idx(layout.layers[li].channels);
        std::iota(idx.begin(), idx.end(), layout.offsets[li]);
        parts.push_back(matvec(tw.render_blocks[li], gather(code_full, idx)));
    }
    return parts.size() == 1 ? parts[0] : concat(parts);
}

Var extract_pose(Tape& tape, const TapedWorld& tw, Var image) {
    check_taped(tape, tw, image, "extract_pose");
    return matvec(tw.pose_map, image);
}

Var extract_expr(Tape& tape, const TapedWorld& tw, Var image) {
    check_taped(tape, tw, image, "extract_expr");
    return matvec(tw.expr_map, image);
}

Var extract_shape(Tape& tape, const TapedWorld& tw, Var image) {
    check_taped(tape, tw, image, "extract_shape");
    return matvec(tw.shape_map, image);
}

Var extract_identity(Tape& tape, const TapedWorld& tw, Var image) {
    check_taped(tape, tw, image, "extract_identity");
    return normalize(matvec(tw.id_map, image));
}

Var landmarks_flat(Tape& tape, const TapedWorld& tw, Var image) {
    check_taped(tape, tw, image, "landmarks_flat");
    Var a_s = matvec(tw.shape_map, image);
    Var a_e = matvec(tw.expr_map, image);
    Var theta = matvec(tw.pose_map, image);
    Var flat =
        add(tw.mean_shape, add(matvec(tw.shape_basis, a_s), matvec(tw.expr_basis, a_e)));
    return rotate_flat(tape, flat, theta);
}

}  // namespace maskmix
