#pragma once

#include <cstdint>

#include "maskmix/autograd.hpp"
#include "maskmix/mask_network.hpp"
#include "maskmix/style_space.hpp"
#include "maskmix/surrogate_world.hpp"
#include "maskmix/tensor.hpp"

namespace maskmix {

// Mask override for diagnostics: zero keeps the source on every active
// channel, one copies the target.
enum class MaskProbe { none, zero, one };

// Seeded orthogonal rotation of the active slice. Training inside a rotated
// basis scrambles the per-channel alignment the mask relies on; comparing
// against aligned training measures how much that alignment buys.
struct ActiveRotation {
    std::uint64_t layout_hash = 0;
    std::uint64_t seed = 0;  // caller-level seed; stream derivation is internal
    Tensor forward;          // active_dims x active_dims, orthogonal
};

ActiveRotation make_active_rotation(const StyleLayout& layout, std::uint64_t seed);

// Replace the active slice by forward (resp. its transpose) applied to it;
// inactive channels pass through untouched.
StyleCode rotate_active(const ActiveRotation& rot, const StyleCode& code);
StyleCode unrotate_active(const ActiveRotation& rot, const StyleCode& code);
Var unrotate_active(Tape& tape, const ActiveRotation& rot, Var code_full,
                    const StyleLayout& layout);

struct ReenactOptions {
    MaskProbe probe = MaskProbe::none;
    const ActiveRotation* rotation = nullptr;  // not owned; null = aligned basis
};

struct ReenactResult {
    StyleCode reenacted;
    Tensor mask;  // per active channel, as applied (in the masking basis)
    CodeSemantics source;
    CodeSemantics target;
    CodeSemantics output;
};

// Mask, mix, and read back the semantics of source, target, and result.
// With a rotation, masking and mixing happen in the rotated basis and the
// result is rotated back before the world sees it.
ReenactResult reenact(const SurrogateWorld& world, const MaskNetworkParams& model,
                      const StyleCode& s_s, const StyleCode& s_t,
                      const ReenactOptions& options = {});

}  // namespace maskmix
