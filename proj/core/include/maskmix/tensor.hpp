#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "maskmix/errors.hpp"

namespace maskmix {

// Dense row-major matrix of doubles. Vectors are n x 1, scalars 1 x 1.
struct Tensor {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    static Tensor zeros(std::size_t r, std::size_t c = 1) { return Tensor(r, c); }

    static Tensor scalar(double x) {
        Tensor t(1, 1);
        t.data[0] = x;
        return t;
    }

    static Tensor column(std::vector<double> v) {
        Tensor t;
        t.rows = v.size();
        t.cols = 1;
        t.data = std::move(v);
        return t;
    }

    std::size_t size() const { return data.size(); }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    bool is_vector() const { return cols == 1; }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

inline std::string shape_str(const Tensor& t) {
    return std::to_string(t.rows) + "x" + std::to_string(t.cols);
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
    }
}

}  // namespace maskmix
