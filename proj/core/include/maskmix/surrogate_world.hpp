#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "maskmix/autograd.hpp"
#include "maskmix/face_model.hpp"
#include "maskmix/style_space.hpp"
#include "maskmix/tensor.hpp"

namespace maskmix {

// A seeded linear stand-in for the generator and the perception models.
// Codes are "rendered" through an orthogonal map whose channels secretly
// carry pose, expression, and identity; extractors read those channels
// back from the rendered vector. The hidden partition is the ground truth
// that mask recovery is scored against.

struct ChannelPartition {
    // Disjoint active-channel positions, each list sorted ascending.
    std::vector<std::size_t> pose_channels;
    std::vector<std::size_t> expr_channels;
    std::vector<std::size_t> id_channels;
    std::vector<std::size_t> nuisance_channels;
};

struct WorldSizes {
    std::size_t landmark_count = 16;
    std::size_t shape_dim = 8;       // a_s length
    std::size_t expr_dim = 6;        // a_e length
    std::size_t id_feature_dim = 12; // identity embedding length
    double pose_scale = 15.0;        // degrees per unit of code std dev
    std::size_t pose_block = 6;
    std::size_t expr_block = 6;
    std::size_t id_block = 20;       // >= shape_dim + id_feature_dim
    // Active channels beyond the three blocks become nuisance.
};

struct Image {
    Tensor values;  // length total_dims
};

struct SurrogateWorld {
    StyleLayout layout;  // owned; codes from this world point at it
    WorldSizes sizes;
    ChannelPartition partition;
    // Orthogonal render map, block-diagonal per layer: block i is
    // channels(i) x channels(i) and acts on that layer's slice.
    std::vector<Tensor> render_blocks;
    // Dense extraction maps (rows x total_dims), reading the rendered
    // vector. Each is (mixing matrix) * (block selector) * G^T, so composed
    // with G it touches only its own channel block. pose_map returns
    // degrees directly: pose_scale is folded into its rows.
    Tensor pose_map;   // 3 x D, rows yaw, pitch, roll
    Tensor expr_map;   // expr_dim x D
    Tensor shape_map;  // shape_dim x D
    Tensor id_map;     // id_feature_dim x D, pre-normalization
    MorphableBasis basis;
    double pose_scale = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t digest = 0;  // content digest, set at construction
};

// Deterministic per (layout, sizes, seed). The identity block is split in
// sorted order: its first shape_dim channels carry a_s, the next
// id_feature_dim carry the identity embedding.
SurrogateWorld make_world(const StyleLayout& layout, const WorldSizes& sizes,
                          std::uint64_t seed);

// Content digest over layout, sizes, partition, matrices, and basis.
// Recomputed on load to refuse tampered or stale artifacts.
std::uint64_t world_digest(const SurrogateWorld& world);

// Structural validation for deserialized worlds: consistent shapes,
// disjoint in-range partition, block sizes honoring the minimums.
void check_world(const SurrogateWorld& world);

StyleCode sample_code(const SurrogateWorld& world, std::uint64_t seed);

Image render(const SurrogateWorld& world, const StyleCode& s);
StyleCode unrender(const SurrogateWorld& world, const Image& image);

PoseAngles extract_pose(const SurrogateWorld& world, const Image& image);
Tensor extract_expr(const SurrogateWorld& world, const Image& image);
Tensor extract_shape(const SurrogateWorld& world, const Image& image);
Tensor extract_identity(const SurrogateWorld& world, const Image& image);
Landmarks3D landmarks(const SurrogateWorld& world, const Image& image);

struct CodeSemantics {
    PoseAngles pose;
    Tensor expr;        // expr_dim
    Tensor shape;       // shape_dim
    Tensor id_feature;  // id_feature_dim, unit norm
};
CodeSemantics extract_all(const SurrogateWorld& world, const Image& image);

// Identity sub-blocks, positions into the active slice.
std::vector<std::size_t> shape_subchannels(const SurrogateWorld& world);
std::vector<std::size_t> feature_subchannels(const SurrogateWorld& world);

// Active positions whose value the losses can actually see: pose, expr,
// and the two identity sub-blocks. Sorted ascending.
std::vector<std::size_t> semantic_channels(const SurrogateWorld& world);

// Ground-truth block name per active position: "pose", "expr", "id",
// "nuisance", or "unassigned" for positions outside every list.
std::vector<std::string> partition_labels(const ChannelPartition& partition,
                                          std::size_t active_dims);

// Test helper: materializes the block-diagonal render map densely.
// Intended for small layouts.
Tensor dense_render_map(const SurrogateWorld& world);

// World constants placed once per tape and shared by every batch element.
struct TapedWorld {
    const SurrogateWorld* world = nullptr;
    std::vector<Var> render_blocks;
    Var pose_map{};
    Var expr_map{};
    Var shape_map{};
    Var id_map{};
    Var mean_shape{};
    Var shape_basis{};
    Var expr_basis{};
};
TapedWorld put_on_tape(Tape& tape, const SurrogateWorld& world);

// Taped pipeline; code and image are flat vectors on the tape.
Var render(Tape& tape, const TapedWorld& tw, Var code_full);
Var extract_pose(Tape& tape, const TapedWorld& tw, Var image);      // degrees, (yaw, pitch, roll)
Var extract_expr(Tape& tape, const TapedWorld& tw, Var image);
Var extract_shape(Tape& tape, const TapedWorld& tw, Var image);
Var extract_identity(Tape& tape, const TapedWorld& tw, Var image);  // unit norm
Var landmarks_flat(Tape& tape, const TapedWorld& tw, Var image);    // posed, flat 3N

}  // namespace maskmix
