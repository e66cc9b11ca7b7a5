#include "maskmix/trainer.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "maskmix/digest.hpp"
#include "maskmix/errors.hpp"
#include "maskmix/reenact.hpp"
#include "maskmix/rng.hpp"
#include "maskmix/tensor_ops.hpp"

namespace maskmix {

namespace {

void fold(Digest& d, const Tensor& t) {
    d.u64(t.rows);
    d.u64(t.cols);
    d.f64s(t.data);
}

void fold(Digest& d, const TrainConfig& c) {
    d.u64(c.iterations);
    d.u64(c.batch_size);
    d.f64(c.learning_rate);
    d.u64(c.hidden_width);
    d.f64(c.weights.lambda_x);
    d.f64(c.weights.lambda_id);
    d.u64(c.cycle_enabled ? 1 : 0);
    d.u64(c.per_layer_network ? 1 : 0);
    d.u64(c.seed);
    d.str(c.layout_name);
    d.u64(c.world.landmark_count);
    d.u64(c.world.shape_dim);
    d.u64(c.world.expr_dim);
    d.u64(c.world.id_feature_dim);
    d.f64(c.world.pose_scale);
    d.u64(c.world.pose_block);
    d.u64(c.world.expr_block);
    d.u64(c.world.id_block);
    d.str(c.world_path);
    d.u64(c.entangled_basis ? 1 : 0);
    d.u64(c.basis_seed);
    d.u64(c.log_every);
    d.u64(c.checkpoint_every);
    d.u64(c.desk_preset ? 1 : 0);
}

// Fields that pin the optimization trajectory; iterations is the moving
// target and the cadences and world_path only steer output plumbing.
void check_resume_config(const TrainConfig& have, const TrainConfig& want) {
    auto reject = [](const char* field) {
        throw MismatchError(std::string("resume: config disagrees with the checkpoint on ") +
                            field);
    };
    if (have.batch_size != want.batch_size) reject("batch_size");
    if (have.learning_rate != want.learning_rate) reject("learning_rate");
    if (have.hidden_width != want.hidden_width) reject("hidden_width");
    if (have.weights.lambda_x != want.weights.lambda_x) reject("lambda_x");
    if (have.weights.lambda_id != want.weights.lambda_id) reject("lambda_id");
    if (have.cycle_enabled != want.cycle_enabled) reject("cycle_enabled");
    if (have.per_layer_network != want.per_layer_network) reject("per_layer_network");
    if (have.seed != want.seed) reject("seed");
    if (have.layout_name != want.layout_name) reject("layout_name");
    if (have.world.landmark_count != want.world.landmark_count) reject("landmark_count");
    if (have.world.shape_dim != want.world.shape_dim) reject("shape_dim");
    if (have.world.expr_dim != want.world.expr_dim) reject("expr_dim");
    if (have.world.id_feature_dim != want.world.id_feature_dim) reject("id_feature_dim");
    if (have.world.pose_scale != want.world.pose_scale) reject("pose_scale");
    if (have.world.pose_block != want.world.pose_block) reject("pose_block");
    if (have.world.expr_block != want.world.expr_block) reject("expr_block");
    if (have.world.id_block != want.world.id_block) reject("id_block");
    if (have.entangled_basis != want.entangled_basis) reject("entangled_basis");
    if (have.basis_seed != want.basis_seed) reject("basis_seed");
    if (have.desk_preset != want.desk_preset) reject("desk_preset");
}

void check_world_agreement(const TrainConfig& config, const SurrogateWorld& world) {
    if (config.layout_name != world.layout.name)
        throw MismatchError("config targets layout '" + config.layout_name +
                            "' but the world uses '" + world.layout.name + "'");
    const WorldSizes& a = config.world;
    const WorldSizes& b = world.sizes;
    if (a.landmark_count != b.landmark_count || a.shape_dim != b.shape_dim ||
        a.expr_dim != b.expr_dim || a.id_feature_dim != b.id_feature_dim ||
        a.pose_scale != b.pose_scale || a.pose_block != b.pose_block ||
        a.expr_block != b.expr_block || a.id_block != b.id_block)
        throw MismatchError("config world sizes disagree with the world artifact");
}

const char* nonfinite_term(const LossBreakdown& terms) {
    if (!std::isfinite(terms.shape)) return "shape";
    if (!std::isfinite(terms.identity)) return "identity";
    if (!std::isfinite(terms.cycle_shape)) return "cycle_shape";
    if (!std::isfinite(terms.cycle_identity)) return "cycle_identity";
    if (!std::isfinite(terms.total)) return "total";
    return nullptr;
}

Checkpoint make_initial(const TrainConfig& config, const SurrogateWorld& world) {
    check_world_agreement(config, world);
    Checkpoint state;
    state.config = config;
    state.world_digest = world.digest;
    state.iteration = 0;
    state.params = init_mask_network(world.layout, config.hidden_width,
                                     derive_seed(config.seed, streams::init),
                                     config.per_layer_network);
    state.adam.learning_rate = config.learning_rate;
    state.digest = checkpoint_digest(state);
    return state;
}

Checkpoint run_loop(Checkpoint state, const TrainConfig& config, const SurrogateWorld& world,
                    const TrainSinks& sinks, TrainStats* stats) {
    TrainStats local;
    TrainStats& st = stats != nullptr ? *stats : local;

    const std::optional<ActiveRotation> rotation = training_rotation(config, world.layout);
    const ActiveRotation* rot = rotation ? &*rotation : nullptr;

    const auto t0 = std::chrono::steady_clock::now();
    const double inv_batch = 1.0 / static_cast<double>(config.batch_size);
    bool first = true;

    for (std::uint64_t i = state.iteration + 1; i <= config.iterations; ++i) {
        Rng rng(derive_seed(config.seed, streams::train, i));
        Tape tape;
        const TapedWorld tw = put_on_tape(tape, world);
        const TapedMaskNetwork net = put_on_tape(tape, state.params);

        LossBreakdown sums;
        std::vector<Var> totals;
        totals.reserve(config.batch_size);
        for (std::size_t b = 0; b < config.batch_size; ++b) {
            const StyleCode s_s = sample_code(world, rng.next_u64());
            const StyleCode s_t = sample_code(world, rng.next_u64());
            std::optional<StyleCode> s_t2;
            if (config.cycle_enabled) s_t2.emplace(sample_code(world, rng.next_u64()));
            const TapedPairLoss pl =
                pair_loss(tape, config.weights, tw, net, s_s, s_t,
                          s_t2 ? &*s_t2 : nullptr, rot, &st.counters);
            sums.shape += pl.terms.shape;
            sums.identity += pl.terms.identity;
            sums.reenactment += pl.terms.reenactment;
            sums.cycle_shape += pl.terms.cycle_shape;
            sums.cycle_identity += pl.terms.cycle_identity;
            sums.cycle += pl.terms.cycle;
            sums.total += pl.terms.total;
            totals.push_back(pl.total);
        }
        Var batch_total = mean(concat(totals));
        const double total_value = batch_total.value()[0];
        if (!std::isfinite(total_value)) {
            const char* term = nonfinite_term(sums);
            throw NumericError("iteration " + std::to_string(i) + ": non-finite " +
                               (term != nullptr ? term : "loss"));
        }

        tape.backward(batch_total);
        const std::vector<Var> block_vars = taped_param_blocks(net);
        std::vector<const Tensor*> grads;
        grads.reserve(block_vars.size());
        double grad_sq = 0.0;
        for (const Var& v : block_vars) {
            const Tensor& g = tape.grad_of(v.id);
            for (double x : g.data) grad_sq += x * x;
            grads.push_back(&g);
        }
        adam_step(param_blocks(state.params), grads, state.adam);
        state.iteration = i;

        st.iterations_run += 1;
        if (first) {
            st.initial_total = total_value;
            first = false;
        }
        st.final_total = total_value;

        const bool last = i == config.iterations;
        if (sinks.on_log && ((config.log_every != 0 && i % config.log_every == 0) || last)) {
            TrainLogRow row;
            row.iteration = i;
            row.terms.shape = sums.shape * inv_batch;
            row.terms.identity = sums.identity * inv_batch;
            row.terms.reenactment = sums.reenactment * inv_batch;
            row.terms.cycle_shape = sums.cycle_shape * inv_batch;
            row.terms.cycle_identity = sums.cycle_identity * inv_batch;
            row.terms.cycle = sums.cycle * inv_batch;
            row.terms.total = sums.total * inv_batch;
            row.grad_norm = std::sqrt(grad_sq);
            row.wall_time_s =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            sinks.on_log(row);
        }
        if ((config.checkpoint_every != 0 && i % config.checkpoint_every == 0) || last) {
            state.digest = checkpoint_digest(state);
            if (sinks.on_checkpoint) sinks.on_checkpoint(state);
        }
    }
    state.digest = checkpoint_digest(state);
    return state;
}

}  // namespace

std::optional<ActiveRotation> training_rotation(const TrainConfig& config,
                                                const StyleLayout& layout) {
    if (!config.entangled_basis) return std::nullopt;
    return make_active_rotation(layout, config.basis_seed);
}

void apply_desk_preset(TrainConfig& config) {
    config.iterations = 2000;
    config.batch_size = 8;
    config.layout_name = "toy";
    config.learning_rate = 3.5e-3;
}

TrainConfig normalize_config(const TrainConfig& config) {
    TrainConfig out = config;
    if (out.batch_size == 0) throw ShapeError("config: batch_size must be at least 1");
    if (!std::isfinite(out.learning_rate) || out.learning_rate <= 0.0)
        throw ShapeError("config: learning_rate must be positive and finite");
    check_weights(out.weights);
    if (out.layout_name.empty()) throw ShapeError("config: layout_name is empty");
    return out;
}

std::uint64_t checkpoint_digest(const Checkpoint& checkpoint) {
    Digest d;
    d.str("checkpoint/v1");
    fold(d, checkpoint.config);
    d.u64(checkpoint.world_digest);
    d.u64(checkpoint.iteration);
    d.u64(checkpoint.params.layout_hash);
    d.u64(checkpoint.params.per_layer ? 1 : 0);
    d.u64(checkpoint.params.hidden_width);
    d.u64(checkpoint.params.subnets.size());
    for (const MaskSubNetParams& sub : checkpoint.params.subnets) {
        d.u64(static_cast<std::uint64_t>(static_cast<std::int64_t>(sub.layer_s_index)));
        fold(d, sub.W1);
        fold(d, sub.b1);
        fold(d, sub.W2);
        fold(d, sub.b2);
    }
    d.u64(checkpoint.adam.step_count);
    d.f64(checkpoint.adam.beta1);
    d.f64(checkpoint.adam.beta2);
    d.f64(checkpoint.adam.epsilon);
    d.f64(checkpoint.adam.learning_rate);
    d.u64(checkpoint.adam.first_moment.size());
    for (const Tensor& t : checkpoint.adam.first_moment) fold(d, t);
    d.u64(checkpoint.adam.second_moment.size());
    for (const Tensor& t : checkpoint.adam.second_moment) fold(d, t);
    return d.value();
}

Checkpoint train(const TrainConfig& config, const SurrogateWorld& world,
                 const TrainSinks& sinks, TrainStats* stats) {
    const TrainConfig cfg = normalize_config(config);
    Checkpoint state = make_initial(cfg, world);
    if (cfg.iterations == 0) return state;
    return run_loop(std::move(state), cfg, world, sinks, stats);
}

Checkpoint resume(const Checkpoint& start, const TrainConfig& config,
                  const SurrogateWorld& world, const TrainSinks& sinks, TrainStats* stats) {
    const TrainConfig cfg = normalize_config(config);
    check_resume_config(start.config, cfg);
    check_world_agreement(cfg, world);
    if (start.world_digest != world.digest)
        throw MismatchError("resume: checkpoint world digest " + to_hex(start.world_digest) +
                            " does not match world " + to_hex(world.digest));
    if (checkpoint_digest(start) != start.digest)
        throw MismatchError("resume: checkpoint content does not match its stored digest " +
                            to_hex(start.digest));
    if (start.iteration >= cfg.iterations) return start;
    Checkpoint state = start;
    state.config.iterations = cfg.iterations;
    state.config.log_every = cfg.log_every;
    state.config.checkpoint_every = cfg.checkpoint_every;
    state.config.world_path = cfg.world_path;
    state.digest = checkpoint_digest(state);
    return run_loop(std::move(state), cfg, world, sinks, stats);
}

}  // namespace maskmix
