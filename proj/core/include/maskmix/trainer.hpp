#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "maskmix/autograd.hpp"
#include "maskmix/losses.hpp"
#include "maskmix/mask_network.hpp"
#include "maskmix/surrogate_world.hpp"

namespace maskmix {

// Training loop: sample unpaired (source, target, second-target) triples,
// run mask, mix, render, extract, score, backpropagate, and update only the
// mask network. The world stays frozen throughout.

struct TrainConfig {
    std::uint64_t iterations = 70000;
    std::size_t batch_size = 6;
    double learning_rate = 1e-4;
    std::size_t hidden_width = 0;  // 0: per-layer hidden width = channel count
    LossWeights weights;
    bool cycle_enabled = true;
    bool per_layer_network = true;
    std::uint64_t seed = 1;
    std::string layout_name = "stylegan2-ffhq";
    WorldSizes world;
    std::string world_path;  // operator-level world artifact location
    bool entangled_basis = false;
    std::uint64_t basis_seed = 0;
    std::uint64_t log_every = 100;
    std::uint64_t checkpoint_every = 1000;
    bool desk_preset = false;
};

// Desk-scale schedule used by the fast regression battery: 2000 iterations
// of batch 8 on the toy layout. At this horizon the short run needs a much
// hotter step size than the full-scale default to saturate the masks.
// Applied as a starting point: callers overwrite individual fields after.
// The config file reader does exactly that, so explicit keys beat the
// preset; the desk_preset flag survives as provenance in snapshots.
void apply_desk_preset(TrainConfig& config);

// Validates values; every entry point validates first. Does not modify the
// configuration beyond copying it.
TrainConfig normalize_config(const TrainConfig& config);

// The basis rotation a configuration trains under, or nullopt when the
// codes are used as-is. Evaluation and reenactment rebuild it from the
// checkpointed configuration so they probe the network in its own basis.
std::optional<ActiveRotation> training_rotation(const TrainConfig& config,
                                                const StyleLayout& layout);

struct Checkpoint {
    TrainConfig config;  // normalized snapshot of the run's configuration
    std::uint64_t world_digest = 0;
    std::uint64_t iteration = 0;  // completed iterations
    MaskNetworkParams params;
    AdamState adam;
    std::uint64_t digest = 0;  // checkpoint_digest of the fields above
};

std::uint64_t checkpoint_digest(const Checkpoint& checkpoint);

struct TrainLogRow {
    std::uint64_t iteration = 0;  // 1-based, just completed
    LossBreakdown terms;          // batch means
    double grad_norm = 0.0;       // L2 over all parameter gradients
    double wall_time_s = 0.0;     // since this run started; excluded from digests
};

struct TrainStats {
    LossCounters counters;
    std::uint64_t iterations_run = 0;
    double initial_total = 0.0;  // batch-mean total at the first iteration run
    double final_total = 0.0;    // batch-mean total at the last iteration run
};

// Output hooks; both optional. Rows arrive every log_every iterations and
// at the end; checkpoints every checkpoint_every iterations and at the end.
struct TrainSinks {
    std::function<void(const TrainLogRow&)> on_log;
    std::function<void(const Checkpoint&)> on_checkpoint;
};

// Fresh run from a seeded initialization. The returned checkpoint is the
// final state; with iterations = 0 it is exactly the initialization.
Checkpoint train(const TrainConfig& config, const SurrogateWorld& world,
                 const TrainSinks& sinks = {}, TrainStats* stats = nullptr);

// Continue a run toward config.iterations (the total target). A run of k
// iterations resumed to k + j is bitwise equal to an unbroken k + j run.
// Already-complete checkpoints return unchanged.
Checkpoint resume(const Checkpoint& start, const TrainConfig& config,
                  const SurrogateWorld& world, const TrainSinks& sinks = {},
                  TrainStats* stats = nullptr);

}  // namespace maskmix
