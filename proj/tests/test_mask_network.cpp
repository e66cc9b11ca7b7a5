#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "maskmix/autograd.hpp"
#include "maskmix/errors.hpp"
#include "maskmix/mask_network.hpp"
#include "maskmix/style_space.hpp"
#include "maskmix/tensor.hpp"
#include "oracles.hpp"

using namespace maskmix;

namespace {

Tensor random_vec(std::mt19937_64& gen, std::size_t n, double scale = 2.0) {
    std::uniform_real_distribution<double> d(-scale, scale);
    Tensor t(n, 1);
    for (double& x : t.data) x = d(gen);
    return t;
}

oracle::Mat to_mat(const Tensor& t) {
    oracle::Mat m(t.rows, oracle::Vec(t.cols));
    for (std::size_t i = 0; i < t.rows; ++i)
        for (std::size_t j = 0; j < t.cols; ++j) m[i][j] = t(i, j);
    return m;
}

oracle::Vec to_vec(const Tensor& t) { return oracle::Vec(t.data.begin(), t.data.end()); }

// Full-network oracle: walk active layers in order, slice the delta by the
// layout's offsets, run each slice through the straight-line subnet.
oracle::Vec oracle_mask(const MaskNetworkParams& params, const StyleLayout& layout,
                        const Tensor& delta_full) {
    oracle::Vec out;
    std::size_t which = 0;
    for (std::size_t pos : layout.active_layers) {
        const MaskSubNetParams& sub =
            params.per_layer ? params.subnets[which++] : params.subnets[0];
        oracle::Vec d(layout.layers[pos].channels);
        for (std::size_t j = 0; j < d.size(); ++j)
            d[j] = delta_full[layout.offsets[pos] + j];
        oracle::Vec m =
            params.per_layer
                ? oracle::mask_layer(d, to_mat(sub.W1), to_vec(sub.b1), to_mat(sub.W2),
                                     to_vec(sub.b2))
                : oracle::mask_layer_padded(d, to_mat(sub.W1), to_vec(sub.b1), to_mat(sub.W2),
                                            to_vec(sub.b2));
        out.insert(out.end(), m.begin(), m.end());
    }
    return out;
}

StyleLayout uneven_layout() {
    return make_layout("uneven",
                       {{0, 4, LayerKind::conv, 6},
                        {1, 4, LayerKind::toRGB, 3},
                        {2, 8, LayerKind::conv, 10},
                        {3, 8, LayerKind::conv, 4}},
                       {0, 2, 3});
}

}  // namespace

TEST_CASE("initialization is Glorot bounded with zero biases") {
    StyleLayout layout = builtin_layout("toy");
    MaskNetworkParams params = init_mask_network(layout, 0, 123);
    REQUIRE(params.subnets.size() == layout.active_layers.size());
    CHECK(params.per_layer);
    CHECK(params.layout_hash == layout.hash);
    for (std::size_t k = 0; k < params.subnets.size(); ++k) {
        const MaskSubNetParams& sub = params.subnets[k];
        const std::size_t ch = layout.layers[layout.active_layers[k]].channels;
        CHECK(sub.layer_s_index == layout.layers[layout.active_layers[k]].s_index);
        REQUIRE(sub.W1.rows == ch);  // hidden_width 0 means hidden = channels
        REQUIRE(sub.W1.cols == ch);
        REQUIRE(sub.W2.rows == ch);
        REQUIRE(sub.W2.cols == ch);
        const double bound = std::sqrt(6.0 / (2.0 * static_cast<double>(ch)));
        bool any_nonzero = false;
        for (double w : sub.W1.data) {
            CHECK(std::fabs(w) <= bound);
            any_nonzero = any_nonzero || w != 0.0;
        }
        CHECK(any_nonzero);
        for (double b : sub.b1.data) CHECK(b == 0.0);
        for (double b : sub.b2.data) CHECK(b == 0.0);
    }
}

TEST_CASE("initialization is deterministic per seed") {
    StyleLayout layout = builtin_layout("toy");
    MaskNetworkParams a = init_mask_network(layout, 0, 5);
    MaskNetworkParams b = init_mask_network(layout, 0, 5);
    MaskNetworkParams c = init_mask_network(layout, 0, 6);
    CHECK(a.subnets[0].W1.data == b.subnets[0].W1.data);
    CHECK(a.subnets[3].W2.data == b.subnets[3].W2.data);
    CHECK(a.subnets[0].W1.data != c.subnets[0].W1.data);
}

TEST_CASE("zero delta maps to one half everywhere at initialization") {
    StyleLayout layout = builtin_layout("toy");
    MaskNetworkParams params = init_mask_network(layout, 0, 9);
    Tensor m = mask_forward(params, layout, Tensor::zeros(layout.total_dims));
    REQUIRE(m.rows == layout.active_dims);
    for (double v : m.data) CHECK(v == 0.5);
}

TEST_CASE("mask_forward matches the straight-line oracle on random inputs") {
    StyleLayout layout = builtin_layout("toy");
    MaskNetworkParams params = init_mask_network(layout, 12, 77);
    std::mt19937_64 gen(100);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor d = random_vec(gen, layout.total_dims);
        Tensor got = mask_forward(params, layout, d);
        oracle::Vec want = oracle_mask(params, layout, d);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            CHECK(std::fabs(got[i] - want[i]) <= 1e-12);
            CHECK(got[i] > 0.0);
            CHECK(got[i] < 1.0);
        }
    }
}

TEST_CASE("global network pads narrow layers and truncates wide outputs") {
    StyleLayout layout = uneven_layout();
    MaskNetworkParams params = init_mask_network(layout, 0, 42, false);
    REQUIRE(params.subnets.size() == 1);
    CHECK_FALSE(params.per_layer);
    CHECK(params.subnets[0].layer_s_index == -1);
    CHECK(params.subnets[0].W1.cols == 10);  // widest active layer
    CHECK(params.subnets[0].W2.rows == 10);

    std::mt19937_64 gen(4);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor d = random_vec(gen, layout.total_dims);
        Tensor got = mask_forward(params, layout, d);
        oracle::Vec want = oracle_mask(params, layout, d);
        REQUIRE(got.size() == layout.active_dims);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < want.size(); ++i)
            CHECK(std::fabs(got[i] - want[i]) <= 1e-12);
    }
}

TEST_CASE("mix matches the elementwise oracle exactly") {
    StyleLayout layout = uneven_layout();
    MaskNetworkParams params = init_mask_network(layout, 0, 8);
    std::mt19937_64 gen(21);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        StyleCode s = make_code(layout, random_vec(gen, layout.total_dims));
        StyleCode t = make_code(layout, random_vec(gen, layout.total_dims));
        Tensor m(layout.active_dims, 1);
        for (double& v : m.data) v = unit(gen);
        StyleCode r = mix(s, t, m);
        oracle::Vec want = oracle::mix(to_vec(s.values), to_vec(t.values), to_vec(m),
                                       layout.active_to_flat);
        for (std::size_t i = 0; i < layout.total_dims; ++i) CHECK(r.values[i] == want[i]);
    }
}

TEST_CASE("mix endpoints reproduce the inputs bitwise") {
    StyleLayout layout = uneven_layout();
    std::mt19937_64 gen(33);
    StyleCode s = make_code(layout, random_vec(gen, layout.total_dims));
    StyleCode t = make_code(layout, random_vec(gen, layout.total_dims));

    Tensor zeros = Tensor::zeros(layout.active_dims);
    StyleCode keep = mix(s, t, zeros);
    for (std::size_t i = 0; i < layout.total_dims; ++i) CHECK(keep.values[i] == s.values[i]);

    Tensor ones(layout.active_dims, 1);
    for (double& v : ones.data) v = 1.0;
    StyleCode swap = mix(s, t, ones);
    std::vector<bool> active(layout.total_dims, false);
    for (std::size_t f : layout.active_to_flat) active[f] = true;
    for (std::size_t i = 0; i < layout.total_dims; ++i)
        CHECK(swap.values[i] == (active[i] ? t.values[i] : s.values[i]));
}

TEST_CASE("mix rejects mismatched layouts and mask lengths") {
    StyleLayout layout = builtin_layout("toy");
    StyleLayout other = builtin_layout("stylegan2-ffhq");
    StyleCode s = make_code(layout, Tensor::zeros(layout.total_dims));
    StyleCode t = make_code(layout, Tensor::zeros(layout.total_dims));
    StyleCode f = make_code(other, Tensor::zeros(other.total_dims));
    CHECK_THROWS_AS((void)mix(s, f, Tensor::zeros(layout.active_dims)), MismatchError);
    CHECK_THROWS_AS((void)mix(s, t, Tensor::zeros(layout.active_dims - 1)), ShapeError);
}

TEST_CASE("mask_forward rejects a foreign layout and bad delta shapes") {
    StyleLayout layout = builtin_layout("toy");
    StyleLayout other = uneven_layout();
    MaskNetworkParams params = init_mask_network(layout, 0, 1);
    CHECK_THROWS_AS((void)mask_forward(params, other, Tensor::zeros(other.total_dims)),
                    MismatchError);
    CHECK_THROWS_AS((void)mask_forward(params, layout, Tensor::zeros(10)), ShapeError);
}

TEST_CASE("param_blocks orders subnets ascending with W1 b1 W2 b2") {
    StyleLayout layout = builtin_layout("toy");
    MaskNetworkParams params = init_mask_network(layout, 0, 2);
    std::vector<Tensor*> blocks = param_blocks(params);
    REQUIRE(blocks.size() == params.subnets.size() * 4);
    for (std::size_t k = 0; k < params.subnets.size(); ++k) {
        CHECK(blocks[4 * k + 0] == &params.subnets[k].W1);
        CHECK(blocks[4 * k + 1] == &params.subnets[k].b1);
        CHECK(blocks[4 * k + 2] == &params.subnets[k].W2);
        CHECK(blocks[4 * k + 3] == &params.subnets[k].b2);
    }
}

TEST_CASE("taped mask and mix agree with the eager path") {
    StyleLayout layout = uneven_layout();
    MaskNetworkParams params = init_mask_network(layout, 7, 55);
    std::mt19937_64 gen(61);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor sv = random_vec(gen, layout.total_dims);
        Tensor tv = random_vec(gen, layout.total_dims);
        StyleCode s = make_code(layout, sv);
        StyleCode t = make_code(layout, tv);
        Tensor d = delta(s, t).values;

        Tensor eager_mask = mask_forward(params, layout, d);
        StyleCode eager_mixed = mix(s, t, eager_mask);

        Tape tape;
        TapedMaskNetwork net = put_on_tape(tape, params);
        Var vd = tape.input(d);
        Var vm = mask_forward(tape, net, layout, vd);
        REQUIRE(vm.value().rows == layout.active_dims);
        for (std::size_t i = 0; i < layout.active_dims; ++i)
            CHECK(std::fabs(vm.value()[i] - eager_mask[i]) <= 1e-12);

        Var mixed = mix_active(tape, tape.input(sv), tape.input(tv), vm, layout);
        for (std::size_t i = 0; i < layout.total_dims; ++i)
            CHECK(std::fabs(mixed.value()[i] - eager_mixed.values[i]) <= 1e-12);
    }
}

TEST_CASE("taped mask parameters receive gradients") {
    StyleLayout layout = builtin_layout("toy");
    MaskNetworkParams params = init_mask_network(layout, 0, 19);
    std::mt19937_64 gen(71);
    Tensor d = random_vec(gen, layout.total_dims);

    Tape tape;
    TapedMaskNetwork net = put_on_tape(tape, params);
    Var vm = mask_forward(tape, net, layout, tape.input(d));
    tape.backward(sum(vm));
    std::vector<Var> blocks = taped_param_blocks(net);
    REQUIRE(blocks.size() == params.subnets.size() * 4);
    bool any = false;
    for (Var b : blocks)
        for (double g : b.grad().data) any = any || g != 0.0;
    CHECK(any);
}
