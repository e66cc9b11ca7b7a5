#include "maskmix/face_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "maskmix/errors.hpp"
#include "maskmix/rng.hpp"
#include "maskmix/tensor_ops.hpp"
#include "orth.hpp"

namespace maskmix {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

void check_coeffs(const MorphableBasis& basis, const Tensor& a_s, const Tensor& a_e,
                  const char* who) {
    if (!a_s.is_vector() || a_s.rows != basis.shape_dim())
        throw ShapeError(std::string(who) + ": a_s is " + shape_str(a_s) + ", basis expects " +
                         std::to_string(basis.shape_dim()));
    if (!a_e.is_vector() || a_e.rows != basis.expr_dim())
        throw ShapeError(std::string(who) + ": a_e is " + shape_str(a_e) + ", basis expects " +
                         std::to_string(basis.expr_dim()));
    if (!all_finite(a_s) || !all_finite(a_e))
        throw NumericError(std::string(who) + ": non-finite shape coefficients");
}

void check_angles(const PoseAngles& theta, const char* who) {
    if (!std::isfinite(theta.yaw) || !std::isfinite(theta.pitch) || !std::isfinite(theta.roll))
        throw NumericError(std::string(who) + ": non-finite pose angles");
}

}  // namespace

MorphableBasis make_basis(std::size_t landmark_count, std::size_t shape_dim,
                          std::size_t expr_dim, std::uint64_t seed) {
    if (landmark_count == 0 || shape_dim == 0 || expr_dim == 0)
        throw ShapeError("make_basis: landmark_count, shape_dim, expr_dim must be positive");
    const std::size_t rows = 3 * landmark_count;
    if (rows < shape_dim + expr_dim)
        throw ShapeError("make_basis: 3N = " + std::to_string(rows) +
                         " cannot hold " + std::to_string(shape_dim + expr_dim) +
                         " orthonormal columns");
    Rng rng(seed);
    MorphableBasis basis;
    basis.landmark_count = landmark_count;
    basis.mean_shape = Tensor(rows, 1);
    for (std::size_t i = 0; i < rows; ++i) basis.mean_shape[i] = rng.normal();
    Tensor raw(rows, shape_dim + expr_dim);
    for (std::size_t i = 0; i < raw.rows; ++i)
        for (std::size_t j = 0; j < raw.cols; ++j) raw(i, j) = rng.normal();
    const Tensor q = detail::orthonormal_columns(raw);
    basis.shape_basis = Tensor(rows, shape_dim);
    basis.expr_basis = Tensor(rows, expr_dim);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < shape_dim; ++j) basis.shape_basis(i, j) = q(i, j);
        for (std::size_t j = 0; j < expr_dim; ++j) basis.expr_basis(i, j) = q(i, shape_dim + j);
    }
    return basis;
}

Landmarks3D reconstruct(const MorphableBasis& basis, const ShapeParams& p) {
    check_coeffs(basis, p.a_s, p.a_e, "reconstruct");
    const Tensor flat =
        add(basis.mean_shape, add(matvec(basis.shape_basis, p.a_s), matvec(basis.expr_basis, p.a_e)));
    return unflatten(flat);
}

Tensor rotation_matrix(const PoseAngles& theta) {
    check_angles(theta, "rotation_matrix");
    const double cx = std::cos(theta.pitch * kDegToRad), sx = std::sin(theta.pitch * kDegToRad);
    const double cy = std::cos(theta.yaw * kDegToRad), sy = std::sin(theta.yaw * kDegToRad);
    const double cz = std::cos(theta.roll * kDegToRad), sz = std::sin(theta.roll * kDegToRad);
    Tensor rx(3, 3), ry(3, 3), rz(3, 3);
    rx(0, 0) = 1.0;
    rx(1, 1) = cx;
    rx(1, 2) = -sx;
    rx(2, 1) = sx;
    rx(2, 2) = cx;
    ry(0, 0) = cy;
    ry(0, 2) = sy;
    ry(1, 1) = 1.0;
    ry(2, 0) = -sy;
    ry(2, 2) = cy;
    rz(0, 0) = cz;
    rz(0, 1) = -sz;
    rz(1, 0) = sz;
    rz(1, 1) = cz;
    rz(2, 2) = 1.0;
    return matmul(rz, matmul(ry, rx));
}

Landmarks3D rotate(const Landmarks3D& x, const PoseAngles& theta) {
    if (x.points.cols != 3)
        throw ShapeError("rotate: landmarks are " + shape_str(x.points) + ", expected Nx3");
    const Tensor r = rotation_matrix(theta);
    Landmarks3D out{Tensor(x.points.rows, 3)};
    for (std::size_t i = 0; i < x.points.rows; ++i)
        for (std::size_t a = 0; a < 3; ++a)
            out.points(i, a) = r(a, 0) * x.points(i, 0) + r(a, 1) * x.points(i, 1) +
                               r(a, 2) * x.points(i, 2);
    return out;
}

Landmarks3D gt_reenacted_shape(const MorphableBasis& basis, const Tensor& a_s_source,
                               const Tensor& a_e_target, const PoseAngles& theta_target) {
    return rotate(reconstruct(basis, ShapeParams{a_s_source, a_e_target}), theta_target);
}

Tensor flatten(const Landmarks3D& x) {
    if (x.points.cols != 3)
        throw ShapeError("flatten: landmarks are " + shape_str(x.points) + ", expected Nx3");
    Tensor flat(3 * x.points.rows, 1);
    for (std::size_t i = 0; i < x.points.rows; ++i)
        for (std::size_t a = 0; a < 3; ++a) flat[3 * i + a] = x.points(i, a);
    return flat;
}

Landmarks3D unflatten(const Tensor& flat) {
    if (!flat.is_vector() || flat.rows % 3 != 0)
        throw ShapeError("unflatten: expected a 3N vector, got " + shape_str(flat));
    Landmarks3D out{Tensor(flat.rows / 3, 3)};
    for (std::size_t i = 0; i < out.points.rows; ++i)
        for (std::size_t a = 0; a < 3; ++a) out.points(i, a) = flat[3 * i + a];
    return out;
}

Var reconstruct_flat(Tape& tape, const MorphableBasis& basis, Var a_s, Var a_e) {
    if (a_s.tape != &tape || a_e.tape != &tape)
        throw std::logic_error("reconstruct_flat: coefficients live on a different tape");
    check_coeffs(basis, a_s.value(), a_e.value(), "reconstruct_flat");
    Var mean = tape.constant(basis.mean_shape);
    Var us = tape.constant(basis.shape_basis);
    Var ue = tape.constant(basis.expr_basis);
    return add(mean, add(matvec(us, a_s), matvec(ue, a_e)));
}

Var rotate_flat(Tape& tape, Var x_flat, Var theta_deg) {
    if (x_flat.tape != &tape || theta_deg.tape != &tape)
        throw std::logic_error("rotate_flat: operands live on a different tape");
    const Tensor& xv = x_flat.value();
    if (!xv.is_vector() || xv.rows % 3 != 0)
        throw ShapeError("rotate_flat: expected a 3N vector, got " + shape_str(xv));
    const Tensor& tv = theta_deg.value();
    if (!tv.is_vector() || tv.rows != 3)
        throw ShapeError("rotate_flat: pose is " + shape_str(tv) + ", expected a 3-vector");
    const std::size_t n = xv.rows / 3;
    std::vector<std::size_t> ix(n), iy(n), iz(n);
    for (std::size_t i = 0; i < n; ++i) {
        ix[i] = 3 * i;
        iy[i] = 3 * i + 1;
        iz[i] = 3 * i + 2;
    }
    Var x = gather(x_flat, ix);
    Var y = gather(x_flat, iy);
    Var z = gather(x_flat, iz);
    Var rad = cmul(kDegToRad, theta_deg);
    Var yaw = gather(rad, {0});
    Var pitch = gather(rad, {1});
    Var roll = gather(rad, {2});
    {  // about x
        Var c = cos(pitch), s = sin(pitch);
        Var y1 = sub(smul(c, y), smul(s, z));
        Var z1 = add(smul(s, y), smul(c, z));
        y = y1;
        z = z1;
    }
    {  // about y
        Var c = cos(yaw), s = sin(yaw);
        Var x1 = add(smul(c, x), smul(s, z));
        Var z1 = sub(smul(c, z), smul(s, x));
        x = x1;
        z = z1;
    }
    {  // about z
        Var c = cos(roll), s = sin(roll);
        Var x1 = sub(smul(c, x), smul(s, y));
        Var y1 = add(smul(s, x), smul(c, y));
        x = x1;
        y = y1;
    }
    const std::size_t rows = 3 * n;
    return add(add(scatter(x, ix, rows), scatter(y, iy, rows)), scatter(z, iz, rows));
}

}  // namespace maskmix
