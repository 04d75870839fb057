#pragma once

#include "pivio/nav_state.hpp"
#include "pivio/pose.hpp"

#include <optional>

namespace pivio {

// Points at or behind this camera-frame depth fail the cheirality check.
inline constexpr double kMinDepth = 1e-6;

/// Pinhole camera with isotropic focal length, rigidly attached to the body
/// through a known extrinsic transform.
template <typename Scalar>
struct CameraModel {
  Scalar focal = Scalar(0);
  Eigen::Matrix<Scalar, 2, 1> principal_point = Eigen::Matrix<Scalar, 2, 1>::Zero();
  Pose<Scalar> body_from_camera;

  void validate() const {
    if (!(focal > Scalar(0))) {
      throw std::invalid_argument("CameraModel: focal must be positive");
    }
  }
};

using CameraModeld = CameraModel<double>;

/// Projects a world-frame landmark through the body pose and the camera
/// extrinsics. Empty when the point lies at or behind the image plane.
template <typename Scalar>
std::optional<Eigen::Matrix<Scalar, 2, 1>> project(const NavState<Scalar>& state,
                                                   const CameraModel<Scalar>& cam,
                                                   const Vec3<Scalar>& landmark) {
  const Vec3<Scalar> in_body = state.rotation.inverse() * (landmark - state.position);
  const Vec3<Scalar> in_cam = cam.body_from_camera.inverse() * in_body;
  if (!(in_cam(2) > Scalar(kMinDepth))) return std::nullopt;
  return Eigen::Matrix<Scalar, 2, 1>(
      cam.focal * in_cam(0) / in_cam(2) + cam.principal_point(0),
      cam.focal * in_cam(1) / in_cam(2) + cam.principal_point(1));
}

/// Projection plus the Jacobians of the pixel with respect to the pose
/// perturbation [dphi, dp] (body-frame retraction) and the landmark position.
template <typename Scalar>
std::optional<Eigen::Matrix<Scalar, 2, 1>> project_with_jacobians(
    const NavState<Scalar>& state, const CameraModel<Scalar>& cam,
    const Vec3<Scalar>& landmark, Eigen::Matrix<Scalar, 2, 6>* d_pose,
    Eigen::Matrix<Scalar, 2, 3>* d_landmark) {
  const Mat3<Scalar> r_wb = state.rotation.matrix();
  const Mat3<Scalar> r_cb = cam.body_from_camera.rotation.matrix().transpose();
  const Vec3<Scalar> in_body = r_wb.transpose() * (landmark - state.position);
  const Vec3<Scalar> in_cam = r_cb * (in_body - cam.body_from_camera.translation);
  if (!(in_cam(2) > Scalar(kMinDepth))) return std::nullopt;

  const Scalar inv_z = Scalar(1) / in_cam(2);
  Eigen::Matrix<Scalar, 2, 3> d_proj;
  d_proj << cam.focal * inv_z, Scalar(0), -cam.focal * in_cam(0) * inv_z * inv_z,
      Scalar(0), cam.focal * inv_z, -cam.focal * in_cam(1) * inv_z * inv_z;

  if (d_pose) {
    // in_body(dphi, dp) = Exp(-dphi) (in_body - dp) to first order.
    d_pose->template leftCols<3>() = d_proj * r_cb * hat(in_body);
    d_pose->template rightCols<3>() = -d_proj * r_cb;
  }
  if (d_landmark) {
    *d_landmark = d_proj * r_cb * r_wb.transpose();
  }
  return Eigen::Matrix<Scalar, 2, 1>(cam.focal * in_cam(0) * inv_z + cam.principal_point(0),
                                     cam.focal * in_cam(1) * inv_z + cam.principal_point(1));
}

}  // namespace pivio
