#pragma once

#include "pivio/imu_types.hpp"
#include "pivio/so3.hpp"

#include <stdexcept>

namespace pivio {

// zyx (yaw-pitch-roll) convention throughout: theta = [roll, pitch, yaw] and
// R(theta) = Rz(yaw) Ry(pitch) Rx(roll). Gimbal lock at pitch = pi/2 + n*pi.
inline constexpr double kGimbalTol = 1e-6;

template <typename Derived>
Mat3<typename Derived::Scalar> euler_to_rotation(const Eigen::MatrixBase<Derived>& theta_expr) {
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  const Vec3<Scalar> theta = theta_expr;
  const Scalar cr = cos(theta(0)), sr = sin(theta(0));
  const Scalar cp = cos(theta(1)), sp = sin(theta(1));
  const Scalar cy = cos(theta(2)), sy = sin(theta(2));
  Mat3<Scalar> rx, ry, rz;
  rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  return rz * ry * rx;
}

/// Conjugate Euler angle rate matrix: body_omega = E'(theta) * dtheta/dt.
template <typename Derived>
Mat3<typename Derived::Scalar> euler_rate_matrix(const Eigen::MatrixBase<Derived>& theta_expr) {
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  const Vec3<Scalar> theta = theta_expr;
  const Scalar cr = cos(theta(0)), sr = sin(theta(0));
  const Scalar cp = cos(theta(1)), sp = sin(theta(1));
  Mat3<Scalar> e;
  e << 1, 0, -sp,
       0, cr, sr * cp,
       0, -sr, cr * cp;
  return e;
}

template <typename Derived>
bool near_gimbal_lock(const Eigen::MatrixBase<Derived>& theta,
                      typename Derived::Scalar tol =
                          typename Derived::Scalar(kGimbalTol)) {
  return std::abs(std::cos(theta(1))) <= tol;
}

/// Inverse of the rate matrix. Throws std::domain_error at gimbal lock.
template <typename Derived>
Mat3<typename Derived::Scalar> euler_rate_matrix_inv(const Eigen::MatrixBase<Derived>& theta_expr) {
  using Scalar = typename Derived::Scalar;
  using std::cos;
  using std::sin;
  using std::tan;
  const Vec3<Scalar> theta = theta_expr;
  if (near_gimbal_lock(theta)) {
    throw std::domain_error("euler_rate_matrix_inv: gimbal lock at pitch pi/2 + n*pi");
  }
  const Scalar cr = cos(theta(0)), sr = sin(theta(0));
  const Scalar cp = cos(theta(1)), tp = tan(theta(1));
  Mat3<Scalar> inv;
  inv << 1, sr * tp, cr * tp,
         0, cr, -sr,
         0, sr / cp, cr / cp;
  return inv;
}

/// One Euler-angle integration step of a body rotation rate.
template <typename DTheta, typename DOmega>
Vec3<typename DTheta::Scalar> euler_integrate(const Eigen::MatrixBase<DTheta>& theta,
                                              const Eigen::MatrixBase<DOmega>& omega,
                                              typename DTheta::Scalar dt) {
  return theta + euler_rate_matrix_inv(theta) * omega * dt;
}

/// First-order mean and covariance propagation of the Euler-angle state under
/// gyro noise. The transition Jacobian differentiates the inverse rate matrix
/// by central differences.
template <typename Scalar>
void euler_covariance_step(Vec3<Scalar>* theta, Mat3<Scalar>* cov,
                           const Vec3<Scalar>& omega, Scalar dt,
                           const ImuNoiseModel<Scalar>& noise) {
  const Scalar eps = Scalar(1e-7);
  Mat3<Scalar> d_inv_omega;  // d([E'(theta)]^-1 omega) / d theta
  for (int d = 0; d < 3; ++d) {
    Vec3<Scalar> tp = *theta, tm = *theta;
    tp(d) += eps;
    tm(d) -= eps;
    d_inv_omega.col(d) =
        (euler_rate_matrix_inv(tp) * omega - euler_rate_matrix_inv(tm) * omega) /
        (Scalar(2) * eps);
  }
  const Mat3<Scalar> a = Mat3<Scalar>::Identity() + d_inv_omega * dt;
  const Mat3<Scalar> b = -euler_rate_matrix_inv(*theta) * dt;
  const Scalar g2 = noise.gyro_noise_density * noise.gyro_noise_density / dt;
  *cov = a * (*cov) * a.transpose() + g2 * b * b.transpose();
  *theta = euler_integrate(*theta, omega, dt);
}

/// On-manifold counterpart: propagates the covariance of the right-tangent
/// rotation perturbation under the same gyro noise.
template <typename Scalar>
void so3_covariance_step(Mat3<Scalar>* cov, const Vec3<Scalar>& omega, Scalar dt,
                         const ImuNoiseModel<Scalar>& noise) {
  const Vec3<Scalar> w_dt = omega * dt;
  const Mat3<Scalar> a = exp_so3(w_dt).matrix().transpose();
  const Mat3<Scalar> b = right_jacobian(w_dt) * dt;
  const Scalar g2 = noise.gyro_noise_density * noise.gyro_noise_density / dt;
  *cov = a * (*cov) * a.transpose() + g2 * b * b.transpose();
}

}  // namespace pivio
