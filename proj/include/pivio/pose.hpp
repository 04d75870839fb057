#pragma once

#include "pivio/so3.hpp"

namespace pivio {

/// Rigid transform (R, p): maps body-frame points into the parent frame.
template <typename Scalar>
struct Pose {
  Rotation<Scalar> rotation;
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  Pose() = default;
  Pose(const Rotation<Scalar>& r, const Vec3<Scalar>& t) : rotation(r), translation(t) {}

  Vec3<Scalar> operator*(const Vec3<Scalar>& v) const {
    return rotation * v + translation;
  }

  Pose operator*(const Pose& rhs) const {
    return Pose(rotation * rhs.rotation, rotation * rhs.translation + translation);
  }

  Pose inverse() const {
    Rotation<Scalar> rt = rotation.inverse();
    return Pose(rt, -(rt * translation));
  }
};

using Posed = Pose<double>;

/// Retraction on SE(3): (R Exp(dphi), p + R dp). Both perturbations are
/// body-frame (right) increments.
template <typename Scalar, typename DPhi, typename DP>
Pose<Scalar> retract_pose(const Pose<Scalar>& t, const Eigen::MatrixBase<DPhi>& dphi,
                          const Eigen::MatrixBase<DP>& dp) {
  return Pose<Scalar>(t.rotation * exp_so3(dphi),
                      t.translation + t.rotation * Vec3<Scalar>(dp));
}

/// Inverse of retract_pose: recovers (dphi, dp) such that
/// retract_pose(a, dphi, dp) == b.
template <typename Scalar>
void local_pose(const Pose<Scalar>& a, const Pose<Scalar>& b, Vec3<Scalar>* dphi,
                Vec3<Scalar>* dp) {
  *dphi = log_so3(a.rotation.inverse() * b.rotation);
  *dp = a.rotation.inverse() * (b.translation - a.translation);
}

}  // namespace pivio
