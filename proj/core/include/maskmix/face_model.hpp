#pragma once

#include <cstddef>
#include <cstdint>

#include "maskmix/autograd.hpp"
#include "maskmix/tensor.hpp"

namespace maskmix {

// Linear 3D landmark model X = mean + U_s a_s + U_e a_e plus a rigid head
// rotation. Angles are degrees at every interface, radians only internally.

struct MorphableBasis {
    std::size_t landmark_count = 0;  // N; flat shape vectors have 3N rows
    Tensor mean_shape;               // 3N
    Tensor shape_basis;              // 3N x m_s, orthonormal columns
    Tensor expr_basis;               // 3N x m_e, orthonormal columns

    std::size_t shape_dim() const { return shape_basis.cols; }
    std::size_t expr_dim() const { return expr_basis.cols; }
};

struct ShapeParams {
    Tensor a_s;  // m_s
    Tensor a_e;  // m_e
};

struct PoseAngles {
    double yaw = 0.0;    // about y, degrees
    double pitch = 0.0;  // about x, degrees
    double roll = 0.0;   // about z, degrees
};

struct Landmarks3D {
    Tensor points;  // N x 3
};

// Draws the mean shape and a Gaussian 3N x (m_s + m_e) matrix from `seed`,
// then takes one QR factorization, so shape and expression columns are
// orthonormal jointly, not just within each basis. Requires 3N >= m_s + m_e.
MorphableBasis make_basis(std::size_t landmark_count, std::size_t shape_dim,
                          std::size_t expr_dim, std::uint64_t seed);

Landmarks3D reconstruct(const MorphableBasis& basis, const ShapeParams& p);

// R = R_z(roll) * R_y(yaw) * R_x(pitch). Under this convention yaw +90
// sends (1, 0, 0) to (0, 0, -1).
Tensor rotation_matrix(const PoseAngles& theta);
Landmarks3D rotate(const Landmarks3D& x, const PoseAngles& theta);

// Supervision target for a source/target pair: source shape coefficients,
// target expression coefficients, target pose.
Landmarks3D gt_reenacted_shape(const MorphableBasis& basis, const Tensor& a_s_source,
                               const Tensor& a_e_target, const PoseAngles& theta_target);

// Conversions between the N x 3 point matrix and the flat 3N vector the
// linear model works in. Flat order is point-major: x0, y0, z0, x1, ...
Tensor flatten(const Landmarks3D& x);
Landmarks3D unflatten(const Tensor& flat);

// Taped counterparts used by the training loss. theta_deg is a 3-vector
// (yaw, pitch, roll) in degrees; shape vectors are flat 3N.
Var reconstruct_flat(Tape& tape, const MorphableBasis& basis, Var a_s, Var a_e);
Var rotate_flat(Tape& tape, Var x_flat, Var theta_deg);

}  // namespace maskmix
