#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "maskmix/errors.hpp"
#include "maskmix/rng.hpp"
#include "maskmix/tensor.hpp"

// Internal Eigen bridge. Not installed; public headers stay Eigen-free.

namespace maskmix::detail {

inline Eigen::MatrixXd to_eigen(const Tensor& t) {
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows), static_cast<Eigen::Index>(t.cols));
    for (std::size_t i = 0; i < t.rows; ++i)
        for (std::size_t j = 0; j < t.cols; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = t(i, j);
    return m;
}

inline Tensor from_eigen(const Eigen::MatrixXd& m) {
    Tensor t(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
    for (std::size_t i = 0; i < t.rows; ++i)
        for (std::size_t j = 0; j < t.cols; ++j)
            t(i, j) = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return t;
}

// Thin QR factor Q with the convention diag(R) >= 0, which pins the column
// signs and makes the result a pure function of the input.
inline Tensor orthonormal_columns(const Tensor& a) {
    if (a.rows < a.cols)
        throw ShapeError("orthonormal_columns: need rows >= cols, got " + shape_str(a));
    const auto rows = static_cast<Eigen::Index>(a.rows);
    const auto cols = static_cast<Eigen::Index>(a.cols);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(to_eigen(a));
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
    const Eigen::MatrixXd& packed = qr.matrixQR();
    for (Eigen::Index j = 0; j < cols; ++j)
        if (packed(j, j) < 0.0) q.col(j) = -q.col(j);
    return from_eigen(q);
}

// Gaussian matrix with orthonormal rows (rows <= cols). In the square case
// the sign-fixed QR of a Gaussian draw is Haar-distributed.
inline Tensor random_row_orthonormal(std::size_t rows, std::size_t cols, Rng& rng) {
    if (rows == 0 || cols == 0 || rows > cols)
        throw ShapeError("random_row_orthonormal: need 1 <= rows <= cols, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
    Tensor raw(cols, rows);
    for (std::size_t i = 0; i < raw.rows; ++i)
        for (std::size_t j = 0; j < raw.cols; ++j) raw(i, j) = rng.normal();
    const Tensor q = orthonormal_columns(raw);
    Tensor out(rows, cols);
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out(i, j) = q(j, i);
    return out;
}

}  // namespace maskmix::detail
