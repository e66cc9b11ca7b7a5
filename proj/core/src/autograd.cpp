#include "maskmix/autograd.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "maskmix/errors.hpp"

namespace maskmix {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double norm_of(const Tensor& t) {
    double s = 0.0;
    for (double v : t.data) s += v * v;
    return std::sqrt(s);
}

double dot_of(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

}  // namespace

void Tape::check_mine(Var v, const char* op) const {
    if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
        throw std::logic_error(std::string(op) + ": Var does not belong to this tape");
    }
}

Var Tape::push(Node node) {
    if (backward_done_) {
        throw std::logic_error("tape is frozen after backward");
    }
    nodes_.push_back(std::move(node));
    return Var{this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::input(Tensor value) {
    Node n;
    n.op = Op::input;
    n.value = std::move(value);
    return push(std::move(n));
}

Var Tape::op_add(Var a, Var b) {
    check_mine(a, "add");
    check_mine(b, "add");
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    require_same_shape(va, vb, "add");
    Node n;
    n.op = Op::add;
    n.a = a.id;
    n.b = b.id;
    n.value = va;
    for (std::size_t i = 0; i < vb.size(); ++i) n.value[i] += vb[i];
    return push(std::move(n));
}

Var Tape::op_sub(Var a, Var b) {
    check_mine(a, "sub");
    check_mine(b, "sub");
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    require_same_shape(va, vb, "sub");
    Node n;
    n.op = Op::sub;
    n.a = a.id;
    n.b = b.id;
    n.value = va;
    for (std::size_t i = 0; i < vb.size(); ++i) n.value[i] -= vb[i];
    return push(std::move(n));
}

Var Tape::op_mul(Var a, Var b) {
    check_mine(a, "mul");
    check_mine(b, "mul");
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    require_same_shape(va, vb, "mul");
    Node n;
    n.op = Op::mul;
    n.a = a.id;
    n.b = b.id;
    n.value = va;
    for (std::size_t i = 0; i < vb.size(); ++i) n.value[i] *= vb[i];
    return push(std::move(n));
}

Var Tape::op_smul(Var s, Var x) {
    check_mine(s, "smul");
    check_mine(x, "smul");
    const Tensor& vs = s.value();
    if (!vs.is_scalar()) {
        throw ShapeError("smul: first operand must be scalar, got " + shape_str(vs));
    }
    Node n;
    n.op = Op::smul;
    n.a = s.id;
    n.b = x.id;
    n.value = x.value();
    const double c = vs[0];
    for (double& v : n.value.data) v *= c;
    return push(std::move(n));
}

Var Tape::op_cmul(double c, Var x) {
    check_mine(x, "cmul");
    Node n;
    n.op = Op::cmul;
    n.a = x.id;
    n.c = c;
    n.value = x.value();
    for (double& v : n.value.data) v *= c;
    return push(std::move(n));
}

Var Tape::op_cadd(double c, Var x) {
    check_mine(x, "cadd");
    Node n;
    n.op = Op::cadd;
    n.a = x.id;
    n.c = c;
    n.value = x.value();
    for (double& v : n.value.data) v += c;
    return push(std::move(n));
}

Var Tape::op_matvec(Var m, Var v) {
    check_mine(m, "matvec");
    check_mine(v, "matvec");
    const Tensor& vm = m.value();
    const Tensor& vv = v.value();
    if (!vv.is_vector() || vm.cols != vv.rows) {
        throw ShapeError("matvec: incompatible shapes " + shape_str(vm) + " and " + shape_str(vv));
    }
    Node n;
    n.op = Op::matvec;
    n.a = m.id;
    n.b = v.id;
    n.value = Tensor(vm.rows, 1);
    for (std::size_t i = 0; i < vm.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < vm.cols; ++j) s += vm(i, j) * vv[j];
        n.value[i] = s;
    }
    return push(std::move(n));
}

Var Tape::op_matmul(Var a, Var b) {
    check_mine(a, "matmul");
    check_mine(b, "matmul");
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    if (va.cols != vb.rows) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(va) + " and " + shape_str(vb));
    }
    Node n;
    n.op = Op::matmul;
    n.a = a.id;
    n.b = b.id;
    n.value = Tensor(va.rows, vb.cols);
    for (std::size_t i = 0; i < va.rows; ++i) {
        for (std::size_t k = 0; k < va.cols; ++k) {
            const double aik = va(i, k);
            for (std::size_t j = 0; j < vb.cols; ++j) n.value(i, j) += aik * vb(k, j);
        }
    }
    return push(std::move(n));
}

Var Tape::op_relu(Var x) {
    check_mine(x, "relu");
    Node n;
    n.op = Op::relu;
    n.a = x.id;
    n.value = x.value();
    for (double& v : n.value.data) {
        if (v < 0.0) v = 0.0;
    }
    return push(std::move(n));
}

Var Tape::op_sigmoid(Var x) {
    check_mine(x, "sigmoid");
    Node n;
    n.op = Op::sigmoid;
    n.a = x.id;
    n.value = x.value();
    for (double& v : n.value.data) v = stable_sigmoid(v);
    return push(std::move(n));
}

Var Tape::op_sin(Var x) {
    check_mine(x, "sin");
    Node n;
    n.op = Op::sin;
    n.a = x.id;
    n.value = x.value();
    for (double& v : n.value.data) v = std::sin(v);
    return push(std::move(n));
}

Var Tape::op_cos(Var x) {
    check_mine(x, "cos");
    Node n;
    n.op = Op::cos;
    n.a = x.id;
    n.value = x.value();
    for (double& v : n.value.data) v = std::cos(v);
    return push(std::move(n));
}

Var Tape::op_mean(Var x) {
    check_mine(x, "mean");
    const Tensor& vx = x.value();
    if (vx.size() == 0) throw ShapeError("mean: empty tensor");
    double s = 0.0;
    for (double v : vx.data) s += v;
    Node n;
    n.op = Op::mean;
    n.a = x.id;
    n.value = Tensor::scalar(s / static_cast<double>(vx.size()));
    return push(std::move(n));
}

Var Tape::op_sum(Var x) {
    check_mine(x, "sum");
    double s = 0.0;
    for (double v : x.value().data) s += v;
    Node n;
    n.op = Op::sum;
    n.a = x.id;
    n.value = Tensor::scalar(s);
    return push(std::move(n));
}

Var Tape::op_abs_sum(Var x) {
    check_mine(x, "abs_sum");
    double s = 0.0;
    for (double v : x.value().data) s += std::abs(v);
    Node n;
    n.op = Op::abs_sum;
    n.a = x.id;
    n.value = Tensor::scalar(s);
    return push(std::move(n));
}

Var Tape::op_l2_norm(Var x) {
    check_mine(x, "l2_norm");
    Node n;
    n.op = Op::l2_norm;
    n.a = x.id;
    n.value = Tensor::scalar(norm_of(x.value()));
    return push(std::move(n));
}

Var Tape::op_normalize(Var x) {
    check_mine(x, "normalize");
    const Tensor& vx = x.value();
    const double norm = norm_of(vx);
    if (norm == 0.0) throw NumericError("normalize: zero-norm input");
    Node n;
    n.op = Op::normalize;
    n.a = x.id;
    n.c = norm;
    n.value = vx;
    for (double& v : n.value.data) v /= norm;
    return push(std::move(n));
}

Var Tape::op_cosine_sim(Var a, Var b) {
    check_mine(a, "cosine_sim");
    check_mine(b, "cosine_sim");
    const Tensor& va = a.value();
    const Tensor& vb = b.value();
    require_same_shape(va, vb, "cosine_sim");
    const double na = norm_of(va);
    const double nb = norm_of(vb);
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine_sim: zero-norm input");
    Node n;
    n.op = Op::cosine_sim;
    n.a = a.id;
    n.b = b.id;
    n.c = na;
    n.d = nb;
    n.value = Tensor::scalar(dot_of(va, vb) / (na * nb));
    return push(std::move(n));
}

Var Tape::op_gather(Var x, std::vector<std::size_t> idx) {
    check_mine(x, "gather");
    const Tensor& vx = x.value();
    Node n;
    n.op = Op::gather;
    n.a = x.id;
    n.value = Tensor(idx.size(), 1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= vx.size()) {
            throw ShapeError("gather: index " + std::to_string(idx[k]) + " out of range for " +
                             shape_str(vx));
        }
        n.value[k] = vx[idx[k]];
    }
    n.idx = std::move(idx);
    return push(std::move(n));
}

Var Tape::op_scatter(Var x, std::vector<std::size_t> idx, std::size_t out_dim) {
    check_mine(x, "scatter");
    const Tensor& vx = x.value();
    if (vx.size() != idx.size()) {
        throw ShapeError("scatter: " + std::to_string(idx.size()) + " indices for " +
                         shape_str(vx));
    }
    Node n;
    n.op = Op::scatter;
    n.a = x.id;
    n.value = Tensor(out_dim, 1);
    std::vector<bool> seen(out_dim, false);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= out_dim) {
            throw ShapeError("scatter: index " + std::to_string(idx[k]) + " out of range " +
                             std::to_string(out_dim));
        }
        if (seen[idx[k]]) {
            throw ShapeError("scatter: duplicate index " + std::to_string(idx[k]));
        }
        seen[idx[k]] = true;
        n.value[idx[k]] = vx[k];
    }
    n.idx = std::move(idx);
    return push(std::move(n));
}

Var Tape::op_concat(const std::vector<Var>& parts) {
    if (parts.empty()) throw ShapeError("concat: no operands");
    std::size_t total = 0;
    for (Var p : parts) {
        check_mine(p, "concat");
        if (!p.value().is_vector()) {
            throw ShapeError("concat: operand is not a vector: " + shape_str(p.value()));
        }
        total += p.value().size();
    }
    Node n;
    n.op = Op::concat;
    n.value = Tensor(total, 1);
    std::size_t off = 0;
    for (Var p : parts) {
        n.parents.push_back(p.id);
        const Tensor& v = p.value();
        for (std::size_t i = 0; i < v.size(); ++i) n.value[off + i] = v[i];
        off += v.size();
    }
    return push(std::move(n));
}

Tensor& Tape::grad_slot(int id) {
    Tensor& g = grads_[static_cast<std::size_t>(id)];
    if (g.size() == 0) {
        const Tensor& v = nodes_[static_cast<std::size_t>(id)].value;
        g = Tensor(v.rows, v.cols);
    }
    return g;
}

void Tape::accumulate(int id, const Tensor& g) {
    Tensor& slot = grad_slot(id);
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i];
}

const Tensor& Tape::grad_of(int id) {
    if (!backward_done_) throw std::logic_error("grad read before backward");
    return grad_slot(id);
}

void Tape::backward(Var loss) {
    check_mine(loss, "backward");
    if (backward_done_) throw std::logic_error("backward already ran on this tape");
    if (!loss.value().is_scalar()) {
        throw ShapeError("backward: loss must be scalar, got " + shape_str(loss.value()));
    }
    grads_.assign(nodes_.size(), Tensor{});
    grads_[static_cast<std::size_t>(loss.id)] = Tensor::scalar(1.0);
    backward_done_ = true;

    for (int id = loss.id; id >= 0; --id) {
        const Node& n = nodes_[static_cast<std::size_t>(id)];
        const Tensor& g = grads_[static_cast<std::size_t>(id)];
        if (g.size() == 0) continue;  // unreachable from the loss

        switch (n.op) {
            case Op::input:
                break;
            case Op::add:
                accumulate(n.a, g);
                accumulate(n.b, g);
                break;
            case Op::sub: {
                accumulate(n.a, g);
                Tensor& gb = grad_slot(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                break;
            }
            case Op::mul: {
                const Tensor& va = value_of(n.a);
                const Tensor& vb = value_of(n.b);
                Tensor& ga = grad_slot(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
                Tensor& gb = grad_slot(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
                break;
            }
            case Op::smul: {
                const double s = value_of(n.a)[0];
                const Tensor& vx = value_of(n.b);
                double gs = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) gs += g[i] * vx[i];
                grad_slot(n.a)[0] += gs;
                Tensor& gx = grad_slot(n.b);
                for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * s;
                break;
            }
            case Op::cmul: {
                Tensor& ga = grad_slot(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * n.c;
                break;
            }
            case Op::cadd:
                accumulate(n.a, g);
                break;
            case Op::matvec: {
                const Tensor& vm = value_of(n.a);
                const Tensor& vv = value_of(n.b);
                Tensor& gm = grad_slot(n.a);
                Tensor& gv = grad_slot(n.b);
                for (std::size_t i = 0; i < vm.rows; ++i) {
                    const double gi = g[i];
                    for (std::size_t j = 0; j < vm.cols; ++j) {
                        gm(i, j) += gi * vv[j];
                        gv[j] += vm(i, j) * gi;
                    }
                }
                break;
            }
            case Op::matmul: {
                const Tensor& va = value_of(n.a);
                const Tensor& vb = value_of(n.b);
                Tensor& ga = grad_slot(n.a);
                Tensor& gb = grad_slot(n.b);
                for (std::size_t i = 0; i < va.rows; ++i) {
                    for (std::size_t j = 0; j < vb.cols; ++j) {
                        const double gij = g(i, j);
                        for (std::size_t k = 0; k < va.cols; ++k) {
                            ga(i, k) += gij * vb(k, j);
                            gb(k, j) += va(i, k) * gij;
                        }
                    }
                }
                break;
            }
            case Op::relu: {
                const Tensor& vx = value_of(n.a);
                Tensor& ga = grad_slot(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    if (vx[i] > 0.0) ga[i] += g[i];
                }
                break;
            }
            case Op::sigmoid: {
                Tensor& ga = grad_slot(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    const double y = n.value[i];
                    ga[i] += g[i] * y * (1.0 - y);
                }
                break;
            }
            case Op::sin: {
                const Tensor& vx = value_of(n.a);
                Tensor& ga = grad_slot(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * std::cos(vx[i]);
                break;
            }
            case Op::cos: {
                const Tensor& vx = value_of(n.a);
                Tensor& ga = grad_slot(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) ga[i] -= g[i] * std::sin(vx[i]);
                break;
            }
            case Op::mean: {
                const Tensor& vx = value_of(n.a);
                const double gi = g[0] / static_cast<double>(vx.size());
                Tensor& ga = grad_slot(n.a);
                for (double& v : ga.data) v += gi;
                break;
            }
            case Op::sum: {
                Tensor& ga = grad_slot(n.a);
                for (double& v : ga.data) v += g[0];
                break;
            }
            case Op::abs_sum: {
                const Tensor& vx = value_of(n.a);
                Tensor& ga = grad_slot(n.a);
                for (std::size_t i = 0; i < vx.size(); ++i) {
                    if (vx[i] > 0.0) {
                        ga[i] += g[0];
                    } else if (vx[i] < 0.0) {
                        ga[i] -= g[0];
                    }
                }
                break;
            }
            case Op::l2_norm: {
                const double norm = n.value[0];
                if (norm > 0.0) {
                    const Tensor& vx = value_of(n.a);
                    Tensor& ga = grad_slot(n.a);
                    for (std::size_t i = 0; i < vx.size(); ++i) {
                        ga[i] += g[0] * vx[i] / norm;
                    }
                }
                break;
            }
            case Op::normalize: {
                // d/dx (x/|x|) applied to g: (g - y (y.g)) / |x|, y = x/|x|
                double yg = 0.0;
                for (std::size_t i = 0; i < g.size(); ++i) yg += n.value[i] * g[i];
                Tensor& ga = grad_slot(n.a);
                for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += (g[i] - n.value[i] * yg) / n.c;
                }
                break;
            }
            case Op::cosine_sim: {
                const Tensor& va = value_of(n.a);
                const Tensor& vb = value_of(n.b);
                const double y = n.value[0];
                const double na = n.c;
                const double nb = n.d;
                const double g0 = g[0];
                Tensor& ga = grad_slot(n.a);
                Tensor& gb = grad_slot(n.b);
                for (std::size_t i = 0; i < va.size(); ++i) {
                    ga[i] += g0 * (vb[i] / (na * nb) - y * va[i] / (na * na));
                    gb[i] += g0 * (va[i] / (na * nb) - y * vb[i] / (nb * nb));
                }
                break;
            }
            case Op::gather: {
                Tensor& ga = grad_slot(n.a);
                for (std::size_t k = 0; k < n.idx.size(); ++k) ga[n.idx[k]] += g[k];
                break;
            }
            case Op::scatter: {
                Tensor& ga = grad_slot(n.a);
                for (std::size_t k = 0; k < n.idx.size(); ++k) ga[k] += g[n.idx[k]];
                break;
            }
            case Op::concat: {
                std::size_t off = 0;
                for (int pid : n.parents) {
                    Tensor& gp = grad_slot(pid);
                    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
                    off += gp.size();
                }
                break;
            }
        }
    }
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state) {
    if (params.size() != grads.size()) {
        throw ShapeError("adam_step: " + std::to_string(params.size()) + " params vs " +
                         std::to_string(grads.size()) + " grads");
    }
    if (state.first_moment.empty()) {
        for (const Tensor* p : params) {
            state.first_moment.emplace_back(p->rows, p->cols);
            state.second_moment.emplace_back(p->rows, p->cols);
        }
    }
    if (state.first_moment.size() != params.size()) {
        throw ShapeError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                         " blocks, got " + std::to_string(params.size()));
    }
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (!params[b]->same_shape(*grads[b]) || !params[b]->same_shape(state.first_moment[b])) {
            throw ShapeError("adam_step: shape mismatch in parameter block " + std::to_string(b));
        }
        for (double gv : grads[b]->data) {
            if (!std::isfinite(gv)) {
                throw NumericError("adam_step: non-finite gradient in parameter block " +
                                   std::to_string(b));
            }
        }
    }

    state.step_count += 1;
    const double t = static_cast<double>(state.step_count);
    const double bc1 = 1.0 - std::pow(state.beta1, t);
    const double bc2 = 1.0 - std::pow(state.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        Tensor& p = *params[b];
        const Tensor& g = *grads[b];
        Tensor& m = state.first_moment[b];
        Tensor& v = state.second_moment[b];
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
            v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

}  // namespace maskmix
