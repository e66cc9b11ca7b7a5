#include "maskmix/losses.hpp"

#include <cmath>
#include <string>

#include "maskmix/errors.hpp"
#include "maskmix/tensor_ops.hpp"

namespace maskmix {

namespace {

void check_unit(const Tensor& f, const char* who) {
    if (!f.is_vector())
        throw ShapeError(std::string(who) + ": identity feature is " + shape_str(f));
    const double n = l2_norm(f);
    if (std::abs(n - 1.0) > 1e-6)
        throw NumericError(std::string(who) + ": identity feature norm " + std::to_string(n) +
                           " is not unit");
}

double mean_abs_diff(const Tensor& a, const Tensor& b, const char* who) {
    require_same_shape(a, b, who);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

Var taped_mean_abs(Var a, Var b) {
    return cmul(1.0 / static_cast<double>(a.value().size()), abs_sum(sub(a, b)));
}

Var taped_one_minus_sim(Var a, Var b) {
    return cadd(1.0, cmul(-1.0, cosine_sim(a, b)));
}

double scalar_value(Var v) { return v.value()[0]; }

// Cycle terms given the two re-reenacted codes; the ground truth keeps the
// source shape and takes pose and expression from the second target.
LossBreakdown cycle_terms(const LossWeights& weights, const SurrogateWorld& world,
                          const Image& i_s, const StyleCode& r1, const StyleCode& r2,
                          const StyleCode& s_t2) {
    const Image i_t2 = render(world, s_t2);
    const Image i_r1 = render(world, r1);
    const Image i_r2 = render(world, r2);
    const Landmarks3D x_gt2 =
        gt_reenacted_shape(world.basis, extract_shape(world, i_s), extract_expr(world, i_t2),
                           extract_pose(world, i_t2));
    const Tensor f_s = extract_identity(world, i_s);
    const Tensor f_r1 = extract_identity(world, i_r1);
    const Tensor f_r2 = extract_identity(world, i_r2);
    LossBreakdown out;
    out.cycle_shape =
        shape_loss(landmarks(world, i_r1), x_gt2) + shape_loss(landmarks(world, i_r2), x_gt2);
    out.cycle_identity =
        identity_loss(f_s, f_r1) + identity_loss(f_s, f_r2) + identity_loss(f_r1, f_r2);
    out.cycle = weights.lambda_x * out.cycle_shape + weights.lambda_id * out.cycle_identity;
    out.total = out.cycle;
    return out;
}

}  // namespace

void check_weights(const LossWeights& weights) {
    if (!std::isfinite(weights.lambda_x) || !std::isfinite(weights.lambda_id) ||
        weights.lambda_x < 0.0 || weights.lambda_id < 0.0)
        throw ShapeError("loss weights must be finite and nonnegative");
}

double shape_loss(const Landmarks3D& predicted, const Landmarks3D& target) {
    if (predicted.points.rows != target.points.rows)
        throw ShapeError("shape_loss: " + std::to_string(predicted.points.rows) + " vs " +
                         std::to_string(target.points.rows) + " landmarks");
    return mean_abs_diff(predicted.points, target.points, "shape_loss");
}

double identity_loss(const Tensor& f_a, const Tensor& f_b) {
    check_unit(f_a, "identity_loss");
    check_unit(f_b, "identity_loss");
    return 1.0 - cosine_sim(f_a, f_b);
}

LossBreakdown reenactment_loss(const LossWeights& weights, const Landmarks3D& x_r,
                               const Landmarks3D& x_gt, const Tensor& f_s, const Tensor& f_r) {
    check_weights(weights);
    LossBreakdown out;
    out.shape = shape_loss(x_r, x_gt);
    out.identity = identity_loss(f_s, f_r);
    out.reenactment = weights.lambda_x * out.shape + weights.lambda_id * out.identity;
    out.total = out.reenactment;
    return out;
}

std::pair<StyleCode, StyleCode> cycle_codes(const MaskNetworkParams& model,
                                            const StyleCode& s_s, const StyleCode& s_r,
                                            const StyleCode& s_t2) {
    const StyleLayout& layout = *s_s.layout;
    const Tensor m1 = mask_forward(model, layout, delta(s_s, s_t2).values);
    StyleCode r1 = mix(s_s, s_t2, m1);
    const Tensor m2 = mask_forward(model, layout, delta(s_r, s_t2).values);
    StyleCode r2 = mix(s_r, s_t2, m2);
    return {std::move(r1), std::move(r2)};
}

LossBreakdown cycle_loss(const LossWeights& weights, const SurrogateWorld& world,
                         const MaskNetworkParams& model, const StyleCode& s_s,
                         const StyleCode& s_r, const StyleCode& s_t2) {
    check_weights(weights);
    const auto [r1, r2] = cycle_codes(model, s_s, s_r, s_t2);
    return cycle_terms(weights, world, render(world, s_s), r1, r2, s_t2);
}

LossBreakdown pair_loss(const LossWeights& weights, const SurrogateWorld& world,
                        const MaskNetworkParams& model, const StyleCode& s_s,
                        const StyleCode& s_t, const StyleCode* s_t2,
                        const ActiveRotation* rotation, LossCounters* counters) {
    check_weights(weights);
    const bool rotated = rotation != nullptr;
    const StyleCode ss = rotated ? rotate_active(*rotation, s_s) : s_s;
    const StyleCode st = rotated ? rotate_active(*rotation, s_t) : s_t;

    const Image i_s = render(world, s_s);
    const Image i_t = render(world, s_t);
    const Tensor m = mask_forward(model, world.layout, delta(ss, st).values);
    const StyleCode mixed = mix(ss, st, m);
    const StyleCode s_r = rotated ? unrotate_active(*rotation, mixed) : mixed;
    const Image i_r = render(world, s_r);
    const Landmarks3D x_gt =
        gt_reenacted_shape(world.basis, extract_shape(world, i_s), extract_expr(world, i_t),
                           extract_pose(world, i_t));
    LossBreakdown out =
        reenactment_loss(weights, landmarks(world, i_r), x_gt, extract_identity(world, i_s),
                         extract_identity(world, i_r));
    if (counters != nullptr) counters->main_passes += 1;

    if (s_t2 != nullptr) {
        LossBreakdown cyc;
        if (!rotated) {
            cyc = cycle_loss(weights, world, model, s_s, s_r, *s_t2);
        } else {
            const StyleCode st2 = rotate_active(*rotation, *s_t2);
            const Tensor m1 = mask_forward(model, world.layout, delta(ss, st2).values);
            const StyleCode r1 = unrotate_active(*rotation, mix(ss, st2, m1));
            const Tensor m2 = mask_forward(model, world.layout, delta(mixed, st2).values);
            const StyleCode r2 = unrotate_active(*rotation, mix(mixed, st2, m2));
            cyc = cycle_terms(weights, world, i_s, r1, r2, *s_t2);
        }
        out.cycle_shape = cyc.cycle_shape;
        out.cycle_identity = cyc.cycle_identity;
        out.cycle = cyc.cycle;
        if (counters != nullptr) counters->cycle_passes += 1;
    }
    out.total = out.reenactment + out.cycle;
    return out;
}

TapedPairLoss pair_loss(Tape& tape, const LossWeights& weights, const TapedWorld& tw,
                        const TapedMaskNetwork& net, const StyleCode& s_s,
                        const StyleCode& s_t, const StyleCode* s_t2,
                        const ActiveRotation* rotation, LossCounters* counters) {
    check_weights(weights);
    const SurrogateWorld& world = *tw.world;
    const StyleLayout& layout = world.layout;
    const bool rotated = rotation != nullptr;

    const StyleCode ss = rotated ? rotate_active(*rotation, s_s) : s_s;
    const StyleCode st = rotated ? rotate_active(*rotation, s_t) : s_t;
    Var ss_v = tape.constant(ss.values);
    Var st_v = tape.constant(st.values);
    Var m = mask_forward(tape, net, layout, tape.constant(delta(ss, st).values));
    Var mixed = mix_active(tape, ss_v, st_v, m, layout);
    Var s_r = rotated ? unrotate_active(tape, *rotation, mixed, layout) : mixed;
    Var i_r = render(tape, tw, s_r);
    Var x_r = landmarks_flat(tape, tw, i_r);
    Var f_r = extract_identity(tape, tw, i_r);

    const Image i_s = render(world, s_s);
    const Image i_t = render(world, s_t);
    const Tensor a_s_source = extract_shape(world, i_s);
    const Landmarks3D x_gt = gt_reenacted_shape(world.basis, a_s_source,
                                                extract_expr(world, i_t),
                                                extract_pose(world, i_t));
    Var x_gt_v = tape.constant(flatten(x_gt));
    Var f_s_v = tape.constant(extract_identity(world, i_s));

    Var l_shape = taped_mean_abs(x_r, x_gt_v);
    Var l_identity = taped_one_minus_sim(f_s_v, f_r);
    Var l_reenact = add(cmul(weights.lambda_x, l_shape), cmul(weights.lambda_id, l_identity));
    if (counters != nullptr) counters->main_passes += 1;

    TapedPairLoss out;
    out.terms.shape = scalar_value(l_shape);
    out.terms.identity = scalar_value(l_identity);
    out.terms.reenactment = scalar_value(l_reenact);
    out.total = l_reenact;

    if (s_t2 != nullptr) {
        const StyleCode st2 = rotated ? rotate_active(*rotation, *s_t2) : *s_t2;
        Var st2_v = tape.constant(st2.values);
        Var m1 = mask_forward(tape, net, layout, tape.constant(delta(ss, st2).values));
        Var r1m = mix_active(tape, ss_v, st2_v, m1, layout);
        Var r1 = rotated ? unrotate_active(tape, *rotation, r1m, layout) : r1m;
        Var m2 = mask_forward(tape, net, layout, sub(mixed, st2_v));
        Var r2m = mix_active(tape, mixed, st2_v, m2, layout);
        Var r2 = rotated ? unrotate_active(tape, *rotation, r2m, layout) : r2m;
        Var i_r1 = render(tape, tw, r1);
        Var i_r2 = render(tape, tw, r2);
        Var f_r1 = extract_identity(tape, tw, i_r1);
        Var f_r2 = extract_identity(tape, tw, i_r2);

        const Image i_t2 = render(world, *s_t2);
        const Landmarks3D x_gt2 = gt_reenacted_shape(world.basis, a_s_source,
                                                     extract_expr(world, i_t2),
                                                     extract_pose(world, i_t2));
        Var x_gt2_v = tape.constant(flatten(x_gt2));

        Var l_cycle_shape = add(taped_mean_abs(landmarks_flat(tape, tw, i_r1), x_gt2_v),
                                taped_mean_abs(landmarks_flat(tape, tw, i_r2), x_gt2_v));
        Var l_cycle_identity = add(add(taped_one_minus_sim(f_s_v, f_r1),
                                       taped_one_minus_sim(f_s_v, f_r2)),
                                   taped_one_minus_sim(f_r1, f_r2));
        Var l_cycle = add(cmul(weights.lambda_x, l_cycle_shape),
                          cmul(weights.lambda_id, l_cycle_identity));
        out.terms.cycle_shape = scalar_value(l_cycle_shape);
        out.terms.cycle_identity = scalar_value(l_cycle_identity);
        out.terms.cycle = scalar_value(l_cycle);
        out.total = add(l_reenact, l_cycle);
        if (counters != nullptr) counters->cycle_passes += 1;
    }
    out.terms.total = scalar_value(out.total);
    return out;
}

}  // namespace maskmix
