#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <vector>

#include "maskmix/tensor.hpp"

namespace maskmix {

class Tape;

// Handle to a tape node. Cheap to copy; valid while the tape lives.
// value() references live only until the next op is recorded.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    const Tensor& value() const;
    // Gradient accumulated by backward(); zeros if the node is unreachable
    // from the loss. Only valid after backward() ran.
    const Tensor& grad() const;
};

// Define-by-run reverse-mode tape over Tensor values.
//
// Nodes are recorded in creation order, which is a topological order by
// construction: an op can only reference Vars that already exist. backward()
// walks that order once in reverse, so gradients through shared subexpressions
// accumulate (backward on y = x + x yields grad 2).
//
// A tape is single-use: record forward ops, call backward() once, read grads.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf node. Whether a leaf is a trainable parameter or a constant is the
    // caller's business; gradients accumulate for both and constants simply
    // never read theirs.
    Var input(Tensor value);
    Var constant(Tensor value) { return input(std::move(value)); }

    // Reverse pass from a scalar loss. Populates gradients for every node
    // reachable from it. A second call is rejected: the tape holds no record
    // of which gradients were already consumed.
    void backward(Var loss);

    bool backward_done() const { return backward_done_; }
    std::size_t node_count() const { return nodes_.size(); }

    const Tensor& value_of(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Tensor& grad_of(int id);

    // Primitive ops. Free-function wrappers below are the intended surface.
    Var op_add(Var a, Var b);
    Var op_sub(Var a, Var b);
    Var op_mul(Var a, Var b);
    Var op_smul(Var s, Var x);
    Var op_cmul(double c, Var x);
    Var op_cadd(double c, Var x);
    Var op_matvec(Var m, Var v);
    Var op_matmul(Var a, Var b);
    Var op_relu(Var x);
    Var op_sigmoid(Var x);
    Var op_sin(Var x);
    Var op_cos(Var x);
    Var op_mean(Var x);
    Var op_sum(Var x);
    Var op_abs_sum(Var x);
    Var op_l2_norm(Var x);
    Var op_normalize(Var x);
    Var op_cosine_sim(Var a, Var b);
    Var op_gather(Var x, std::vector<std::size_t> idx);
    Var op_scatter(Var x, std::vector<std::size_t> idx, std::size_t out_dim);
    Var op_concat(const std::vector<Var>& parts);

private:
    enum class Op : std::uint8_t {
        input,
        add,
        sub,
        mul,
        smul,
        cmul,
        cadd,
        matvec,
        matmul,
        relu,
        sigmoid,
        sin,
        cos,
        mean,
        sum,
        abs_sum,
        l2_norm,
        normalize,
        cosine_sim,
        gather,
        scatter,
        concat,
    };

    struct Node {
        Op op;
        Tensor value;
        int a = -1;
        int b = -1;
        double c = 0.0;  // op-specific scalar: cmul/cadd constant, cached norm
        double d = 0.0;  // second cached norm (cosine_sim)
        std::vector<std::size_t> idx;  // gather/scatter indices
        std::vector<int> parents;      // concat only
    };

    Var push(Node node);
    void accumulate(int id, const Tensor& g);
    Tensor& grad_slot(int id);
    void check_mine(Var v, const char* op) const;

    // deque keeps value() references stable while the tape grows
    std::deque<Node> nodes_;
    std::vector<Tensor> grads_;
    bool backward_done_ = false;
};

inline const Tensor& Var::value() const { return tape->value_of(id); }
inline const Tensor& Var::grad() const { return tape->grad_of(id); }

inline Var add(Var a, Var b) { return a.tape->op_add(a, b); }
inline Var sub(Var a, Var b) { return a.tape->op_sub(a, b); }
inline Var mul(Var a, Var b) { return a.tape->op_mul(a, b); }
inline Var smul(Var s, Var x) { return s.tape->op_smul(s, x); }
inline Var cmul(double c, Var x) { return x.tape->op_cmul(c, x); }
inline Var cadd(double c, Var x) { return x.tape->op_cadd(c, x); }
inline Var matvec(Var m, Var v) { return m.tape->op_matvec(m, v); }
inline Var matmul(Var a, Var b) { return a.tape->op_matmul(a, b); }
inline Var relu(Var x) { return x.tape->op_relu(x); }
inline Var sigmoid(Var x) { return x.tape->op_sigmoid(x); }
inline Var sin(Var x) { return x.tape->op_sin(x); }
inline Var cos(Var x) { return x.tape->op_cos(x); }
inline Var mean(Var x) { return x.tape->op_mean(x); }
inline Var sum(Var x) { return x.tape->op_sum(x); }
inline Var abs_sum(Var x) { return x.tape->op_abs_sum(x); }
inline Var l2_norm(Var x) { return x.tape->op_l2_norm(x); }
inline Var normalize(Var x) { return x.tape->op_normalize(x); }
inline Var cosine_sim(Var a, Var b) { return a.tape->op_cosine_sim(a, b); }
inline Var gather(Var x, std::vector<std::size_t> idx) {
    return x.tape->op_gather(x, std::move(idx));
}
inline Var scatter(Var x, std::vector<std::size_t> idx, std::size_t out_dim) {
    return x.tape->op_scatter(x, std::move(idx), out_dim);
}
inline Var concat(const std::vector<Var>& parts) { return parts.front().tape->op_concat(parts); }

// Bias-corrected Adam. Moment tensors are allocated on the first step and
// stay shape-congruent with their parameter blocks afterwards.
struct AdamState {
    std::size_t step_count = 0;
    std::vector<Tensor> first_moment;
    std::vector<Tensor> second_moment;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double learning_rate = 1e-4;
};

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state);

}  // namespace maskmix
