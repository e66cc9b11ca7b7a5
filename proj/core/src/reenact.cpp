#include "maskmix/reenact.hpp"

#include <string>

#include "maskmix/errors.hpp"
#include "maskmix/rng.hpp"
#include "maskmix/tensor_ops.hpp"
#include "orth.hpp"

namespace maskmix {

namespace {

void check_rotation(const ActiveRotation& rot, const StyleCode& code, const char* who) {
    if (code.layout == nullptr || code.layout->hash != rot.layout_hash)
        throw MismatchError(std::string(who) + ": rotation was built for a different layout");
    if (rot.forward.rows != code.layout->active_dims ||
        rot.forward.cols != code.layout->active_dims)
        throw MismatchError(std::string(who) + ": rotation is " + shape_str(rot.forward) +
                            " for " + std::to_string(code.layout->active_dims) +
                            " active channels");
}

}  // namespace

ActiveRotation make_active_rotation(const StyleLayout& layout, std::uint64_t seed) {
    Rng rng(derive_seed(seed, streams::basis_rotation));
    ActiveRotation rot;
    rot.layout_hash = layout.hash;
    rot.seed = seed;
    rot.forward = detail::random_row_orthonormal(layout.active_dims, layout.active_dims, rng);
    return rot;
}

StyleCode rotate_active(const ActiveRotation& rot, const StyleCode& code) {
    check_rotation(rot, code, "rotate_active");
    const StyleLayout& layout = *code.layout;
    StyleCode out = code;
    for (std::size_t i = 0; i < layout.active_dims; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < layout.active_dims; ++j)
            acc += rot.forward(i, j) * code.values[layout.active_to_flat[j]];
        out.values[layout.active_to_flat[i]] = acc;
    }
    return out;
}

StyleCode unrotate_active(const ActiveRotation& rot, const StyleCode& code) {
    check_rotation(rot, code, "unrotate_active");
    const StyleLayout& layout = *code.layout;
    StyleCode out = code;
    for (std::size_t i = 0; i < layout.active_dims; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < layout.active_dims; ++j)
            acc += rot.forward(j, i) * code.values[layout.active_to_flat[j]];
        out.values[layout.active_to_flat[i]] = acc;
    }
    return out;
}

Var unrotate_active(Tape& tape, const ActiveRotation& rot, Var code_full,
                    const StyleLayout& layout) {
    if (code_full.tape != &tape)
        throw std::logic_error("unrotate_active: operand lives on a different tape");
    if (layout.hash != rot.layout_hash)
        throw MismatchError("unrotate_active: rotation was built for a different layout");
    Tensor transposed(rot.forward.cols, rot.forward.rows);
    for (std::size_t i = 0; i < rot.forward.rows; ++i)
        for (std::size_t j = 0; j < rot.forward.cols; ++j)
            transposed(j, i) = rot.forward(i, j);
    Var act = gather(code_full, layout.active_to_flat);
    Var back = matvec(tape.constant(std::move(transposed)), act);
    Var diff = sub(back, act);
    return add(code_full, scatter(diff, layout.active_to_flat, layout.total_dims));
}

ReenactResult reenact(const SurrogateWorld& world, const MaskNetworkParams& model,
                      const StyleCode& s_s, const StyleCode& s_t,
                      const ReenactOptions& options) {
    if (s_s.layout == nullptr || s_t.layout == nullptr)
        throw ShapeError("reenact: codes carry no layout");
    if (s_s.layout->hash != world.layout.hash || s_t.layout->hash != world.layout.hash)
        throw MismatchError("reenact: codes and world use different layouts");
    const StyleLayout& layout = world.layout;

    StyleCode ss = s_s;
    StyleCode st = s_t;
    if (options.rotation != nullptr) {
        ss = rotate_active(*options.rotation, s_s);
        st = rotate_active(*options.rotation, s_t);
    }

    Tensor m(layout.active_dims, 1);
    switch (options.probe) {
        case MaskProbe::none:
            m = mask_forward(model, layout, delta(ss, st).values);
            break;
        case MaskProbe::zero:
            break;  // zeros: keep the source everywhere
        case MaskProbe::one:
            for (double& v : m.data) v = 1.0;
            break;
    }

    StyleCode mixed = mix(ss, st, m);
    StyleCode out =
        options.rotation != nullptr ? unrotate_active(*options.rotation, mixed) : mixed;

    ReenactResult res{std::move(out), std::move(m),
                      extract_all(world, render(world, s_s)),
                      extract_all(world, render(world, s_t)), CodeSemantics{}};
    res.output = extract_all(world, render(world, res.reenacted));
    return res;
}

}  // namespace maskmix
