#pragma once

#include "pivio/nav_state.hpp"
#include "pivio/preintegration.hpp"

#include <Eigen/Cholesky>

#include <stdexcept>

namespace pivio {

using Vec9d = Eigen::Matrix<double, 9, 1>;
using Mat9d = Eigen::Matrix<double, 9, 9>;

/// Unwhitened preintegrated-IMU residual [r_dR; r_dv; r_dp], with the
/// increments first-order corrected to the bias of state i.
inline Vec9d imu_residual(const NavStated& state_i, const NavStated& state_j,
                          const PreintegratedImud& pre, const Vec3d& gravity) {
  const double dt = pre.dt_total();
  const Mat3d ri_t = state_i.rotation.matrix().transpose();
  const PreintegratedDelta<double> corr = bias_corrected_delta(pre, state_i.bias);

  Vec9d r;
  r.segment<3>(kPreRot) = log_so3(
      Rotationd::from_matrix_unchecked(corr.rotation.matrix().transpose() * ri_t *
                                       state_j.rotation.matrix()));
  r.segment<3>(kPreVel) =
      ri_t * (state_j.velocity - state_i.velocity - gravity * dt) - corr.velocity;
  r.segment<3>(kPrePos) =
      ri_t * (state_j.position - state_i.position - state_i.velocity * dt -
              0.5 * gravity * dt * dt) -
      corr.position;
  return r;
}

struct ImuFactorJacobians {
  Eigen::Matrix<double, 9, kStateDim> d_state_i;
  Eigen::Matrix<double, 9, kStateDim> d_state_j;
};

/// Analytic Jacobians of the residual with respect to the tangent
/// perturbations of both states. Blocks not listed are identically zero.
inline ImuFactorJacobians imu_residual_jacobians(const NavStated& state_i,
                                                 const NavStated& state_j,
                                                 const PreintegratedImud& pre,
                                                 const Vec3d& gravity) {
  const double dt = pre.dt_total();
  const Mat3d ri = state_i.rotation.matrix();
  const Mat3d rj = state_j.rotation.matrix();
  const Mat3d ri_t = ri.transpose();
  const Vec3d r_rot = imu_residual(state_i, state_j, pre, gravity).head<3>();
  const Mat3d jr_inv = right_jacobian_inv(r_rot);
  const Vec3d dbg = state_i.bias.gyro - pre.bias_lin().gyro;

  ImuFactorJacobians out;
  out.d_state_i.setZero();
  out.d_state_j.setZero();

  // r_dR rows.
  out.d_state_i.block<3, 3>(kPreRot, kIdxRot) = -jr_inv * rj.transpose() * ri;
  out.d_state_i.block<3, 3>(kPreRot, kIdxBg) =
      -jr_inv * exp_so3(r_rot).matrix().transpose() *
      right_jacobian(Vec3d(pre.j_rot_bg() * dbg)) * pre.j_rot_bg();
  out.d_state_j.block<3, 3>(kPreRot, kIdxRot) = jr_inv;

  // r_dv rows.
  out.d_state_i.block<3, 3>(kPreVel, kIdxRot) =
      hat(Vec3d(ri_t * (state_j.velocity - state_i.velocity - gravity * dt)));
  out.d_state_i.block<3, 3>(kPreVel, kIdxVel) = -ri_t;
  out.d_state_i.block<3, 3>(kPreVel, kIdxBg) = -pre.j_vel_bg();
  out.d_state_i.block<3, 3>(kPreVel, kIdxBa) = -pre.j_vel_ba();
  out.d_state_j.block<3, 3>(kPreVel, kIdxVel) = ri_t;

  // r_dp rows.
  out.d_state_i.block<3, 3>(kPrePos, kIdxRot) =
      hat(Vec3d(ri_t * (state_j.position - state_i.position - state_i.velocity * dt -
                        0.5 * gravity * dt * dt)));
  out.d_state_i.block<3, 3>(kPrePos, kIdxPos) = -Mat3d::Identity();
  out.d_state_i.block<3, 3>(kPrePos, kIdxVel) = -ri_t * dt;
  out.d_state_i.block<3, 3>(kPrePos, kIdxBg) = -pre.j_pos_bg();
  out.d_state_i.block<3, 3>(kPrePos, kIdxBa) = -pre.j_pos_ba();
  out.d_state_j.block<3, 3>(kPrePos, kIdxPos) = ri_t * rj;

  return out;
}

/// Upper-triangular whitener W with W^T W = cov^-1, so that |W r|^2 is the
/// Mahalanobis cost. Throws std::domain_error when cov is singular.
template <int N>
Eigen::Matrix<double, N, N> whitener(const Eigen::Matrix<double, N, N>& cov) {
  Eigen::LDLT<Eigen::Matrix<double, N, N>> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0) {
    throw std::domain_error("whitener: covariance is singular");
  }
  Eigen::Matrix<double, N, N> info =
      ldlt.solve(Eigen::Matrix<double, N, N>::Identity());
  Eigen::LLT<Eigen::Matrix<double, N, N>> llt(
      Eigen::Matrix<double, N, N>((info + info.transpose()) / 2.0));
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("whitener: information matrix is not positive definite");
  }
  return llt.matrixU();
}

/// Bias random-walk residual [bg_j - bg_i; ba_j - ba_i] over an interval of
/// dt_ij seconds. Whitening uses dt_ij * density^2 on each block.
inline Eigen::Matrix<double, 6, 1> bias_residual(const NavStated& state_i,
                                                 const NavStated& state_j) {
  Eigen::Matrix<double, 6, 1> r;
  r.head<3>() = state_j.bias.gyro - state_i.bias.gyro;
  r.tail<3>() = state_j.bias.accel - state_i.bias.accel;
  return r;
}

inline Eigen::Matrix<double, 6, 6> bias_random_walk_cov(const ImuNoiseModeld& noise,
                                                        double dt_ij) {
  if (!(dt_ij > 0.0)) {
    throw std::invalid_argument("bias_random_walk_cov: dt_ij must be positive");
  }
  Eigen::Matrix<double, 6, 6> cov = Eigen::Matrix<double, 6, 6>::Zero();
  cov.topLeftCorner<3, 3>() =
      Mat3d::Identity() * noise.gyro_bias_density * noise.gyro_bias_density * dt_ij;
  cov.bottomRightCorner<3, 3>() =
      Mat3d::Identity() * noise.accel_bias_density * noise.accel_bias_density * dt_ij;
  return cov;
}

}  // namespace pivio
