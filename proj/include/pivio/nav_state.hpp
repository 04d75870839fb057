#pragma once

#include "pivio/imu_types.hpp"
#include "pivio/pose.hpp"
#include "pivio/so3.hpp"

namespace pivio {

// Per-state tangent ordering, shared by every factor and the optimizer:
// [dphi(3), dp(3), dv(3), dbg(3), dba(3)].
inline constexpr int kStateDim = 15;
inline constexpr int kIdxRot = 0;
inline constexpr int kIdxPos = 3;
inline constexpr int kIdxVel = 6;
inline constexpr int kIdxBg = 9;
inline constexpr int kIdxBa = 12;

/// Full per-keyframe state: orientation, position, velocity and IMU biases.
template <typename Scalar>
struct NavState {
  Rotation<Scalar> rotation;
  Vec3<Scalar> position = Vec3<Scalar>::Zero();
  Vec3<Scalar> velocity = Vec3<Scalar>::Zero();
  ImuBias<Scalar> bias;

  Pose<Scalar> pose() const { return Pose<Scalar>(rotation, position); }
};

using NavStated = NavState<double>;

/// Applies a 15-dim tangent perturbation: rotation and position move by the
/// body-frame pose retraction, velocity and biases by plain addition.
template <typename Scalar, typename Derived>
NavState<Scalar> retract(const NavState<Scalar>& x,
                         const Eigen::MatrixBase<Derived>& delta_expr) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, kStateDim);
  const Eigen::Matrix<Scalar, kStateDim, 1> delta = delta_expr;
  NavState<Scalar> out;
  out.rotation = x.rotation * exp_so3(Vec3<Scalar>(delta.template segment<3>(kIdxRot)));
  out.position = x.position + x.rotation * Vec3<Scalar>(delta.template segment<3>(kIdxPos));
  out.velocity = x.velocity + delta.template segment<3>(kIdxVel);
  out.bias.gyro = x.bias.gyro + delta.template segment<3>(kIdxBg);
  out.bias.accel = x.bias.accel + delta.template segment<3>(kIdxBa);
  return out;
}

/// Inverse of retract: the tangent vector taking x to y.
template <typename Scalar>
Eigen::Matrix<Scalar, kStateDim, 1> local(const NavState<Scalar>& x,
                                          const NavState<Scalar>& y) {
  Eigen::Matrix<Scalar, kStateDim, 1> d;
  d.template segment<3>(kIdxRot) = log_so3(Rotation<Scalar>(x.rotation.inverse() * y.rotation));
  d.template segment<3>(kIdxPos) = x.rotation.inverse() * (y.position - x.position);
  d.template segment<3>(kIdxVel) = y.velocity - x.velocity;
  d.template segment<3>(kIdxBg) = y.bias.gyro - x.bias.gyro;
  d.template segment<3>(kIdxBa) = y.bias.accel - x.bias.accel;
  return d;
}

}  // namespace pivio
