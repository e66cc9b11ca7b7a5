#pragma once

#include <cmath>
#include <vector>

#include "maskmix/errors.hpp"
#include "maskmix/tensor.hpp"

// Eager counterparts of the taped primitives. Evaluation and metrics use
// these; training goes through the tape. Scalar reductions return double.

namespace maskmix {

inline Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    return out;
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < b.size(); ++i) out[i] -= b[i];
    return out;
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a;
    for (std::size_t i = 0; i < b.size(); ++i) out[i] *= b[i];
    return out;
}

inline Tensor cmul(double c, const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v *= c;
    return out;
}

inline Tensor cadd(double c, const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v += c;
    return out;
}

inline Tensor matvec(const Tensor& m, const Tensor& v) {
    if (!v.is_vector() || m.cols != v.rows) {
        throw ShapeError("matvec: incompatible shapes " + shape_str(m) + " and " + shape_str(v));
    }
    Tensor out(m.rows, 1);
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) s += m(i, j) * v[j];
        out[i] = s;
    }
    return out;
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) {
        throw ShapeError("matmul: incompatible shapes " + shape_str(a) + " and " + shape_str(b));
    }
    Tensor out(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            for (std::size_t j = 0; j < b.cols; ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

inline Tensor transpose(const Tensor& a) {
    Tensor out(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        for (std::size_t j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    }
    return out;
}

inline Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) {
        if (v < 0.0) v = 0.0;
    }
    return out;
}

inline double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline Tensor sigmoid(const Tensor& x) {
    Tensor out = x;
    for (double& v : out.data) v = sigmoid_scalar(v);
    return out;
}

inline double mean(const Tensor& x) {
    if (x.size() == 0) throw ShapeError("mean: empty tensor");
    double s = 0.0;
    for (double v : x.data) s += v;
    return s / static_cast<double>(x.size());
}

inline double abs_sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data) s += std::abs(v);
    return s;
}

inline double dot(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double l2_norm(const Tensor& x) { return std::sqrt(dot(x, x)); }

inline Tensor normalize(const Tensor& x) {
    const double n = l2_norm(x);
    if (n == 0.0) throw NumericError("normalize: zero-norm input");
    return cmul(1.0 / n, x);
}

inline double cosine_sim(const Tensor& a, const Tensor& b) {
    const double na = l2_norm(a);
    const double nb = l2_norm(b);
    if (na == 0.0 || nb == 0.0) throw NumericError("cosine_sim: zero-norm input");
    // Bitwise-equal inputs answer exactly 1, so self-similarity does not
    // pick up a rounding ulp from the norm product.
    if (a.same_shape(b) && a.data == b.data) return 1.0;
    return dot(a, b) / (na * nb);
}

inline Tensor gather(const Tensor& x, const std::vector<std::size_t>& idx) {
    Tensor out(idx.size(), 1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= x.size()) {
            throw ShapeError("gather: index " + std::to_string(idx[k]) + " out of range for " +
                             shape_str(x));
        }
        out[k] = x[idx[k]];
    }
    return out;
}

inline Tensor scatter(const Tensor& x, const std::vector<std::size_t>& idx, std::size_t out_dim) {
    if (x.size() != idx.size()) {
        throw ShapeError("scatter: " + std::to_string(idx.size()) + " indices for " + shape_str(x));
    }
    Tensor out(out_dim, 1);
    for (std::size_t k = 0; k < idx.size(); ++k) {
        if (idx[k] >= out_dim) {
            throw ShapeError("scatter: index " + std::to_string(idx[k]) + " out of range " +
                             std::to_string(out_dim));
        }
        out[idx[k]] = x[k];
    }
    return out;
}

inline bool all_finite(const Tensor& x) {
    for (double v : x.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace maskmix
