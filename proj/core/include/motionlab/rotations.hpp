#pragma once

#include <Eigen/Core>

#include "motionlab/tensor.hpp"

namespace motionlab {

// Rotation conversions in two flavors: differentiable tensor versions used
// inside learnable paths, and plain Eigen versions for simulation and tests.
// Batched tensors store one rotation per row: axis-angle rows are length 3,
// 6D rows length 6, matrices length 9 (row-major).

// Rodrigues formula; smooth at zero angle
Tensor axis_angle_to_rotmat(const Tensor& omega);         // (3) -> (3,3)
Tensor axis_angle_to_rotmat_batch(const Tensor& omegas);  // (J,3) -> (J,9)

// Gram-Schmidt of the two embedded 3-vectors, third column by cross product.
// Throws NumericError when a column norm falls under 1e-8: degenerate inputs
// would poison the gradients if silently projected.
Tensor rot6d_to_rotmat(const Tensor& r);        // (6) -> (3,3)
Tensor rot6d_to_rotmat_batch(const Tensor& r);  // (J,6) -> (J,9)

// first two columns, flattened; inverse of rot6d_to_rotmat on rotations
Tensor rotmat_to_rot6d(const Tensor& rotmat);  // (3,3) -> (6)

// Log map. Smooth at the identity; throws NumericError within ~1e-9 of a
// half-turn where the axis is ambiguous.
Tensor rotmat_to_axis_angle(const Tensor& rotmat);        // (3,3) -> (3)
Tensor rotmat_to_axis_angle_batch(const Tensor& rotmats); // (J,9) -> (J,3)

// plain-double counterparts (same formulas, no graph)
Eigen::Matrix3d axis_angle_to_rotmat(const Eigen::Vector3d& omega);
Eigen::Vector3d rotmat_to_axis_angle(const Eigen::Matrix3d& rotmat);
Eigen::Matrix3d rot6d_to_rotmat(const Eigen::Matrix<double, 6, 1>& r);
Eigen::Matrix<double, 6, 1> rotmat_to_rot6d(const Eigen::Matrix3d& rotmat);

}  // namespace motionlab
