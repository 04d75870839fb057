#pragma once

#include "pivio/imu_types.hpp"
#include "pivio/nav_state.hpp"
#include "pivio/so3.hpp"

#include <stdexcept>
#include <vector>

namespace pivio {

// Block ordering of the 9-dim preintegration noise: [dphi, dv, dp].
inline constexpr int kPreRot = 0;
inline constexpr int kPreVel = 3;
inline constexpr int kPrePos = 6;

/// Bias-corrected relative motion increments.
template <typename Scalar>
struct PreintegratedDelta {
  Rotation<Scalar> rotation;
  Vec3<Scalar> velocity = Vec3<Scalar>::Zero();
  Vec3<Scalar> position = Vec3<Scalar>::Zero();
};

/// Streaming accumulator of IMU measurements between two keyframes.
///
/// Holds the relative motion increments (dR, dv, dp), their 9x9 covariance
/// propagated iteratively as each sample arrives, and the Jacobians of the
/// increments with respect to the bias linearization point, so that small
/// bias updates do not require re-integration.
///
/// Single-writer: integrate() is not reentrant on one instance. A completed
/// instance is immutable and safe to share across threads.
template <typename Scalar>
class PreintegratedImu {
 public:
  using Mat9 = Eigen::Matrix<Scalar, 9, 9>;

  PreintegratedImu() = default;
  explicit PreintegratedImu(const ImuBias<Scalar>& bias_lin) : bias_lin_(bias_lin) {}

  /// Absorbs one sample valid over the next dt seconds. Position is updated
  /// before velocity before rotation, each using the values at the interval
  /// start.
  void integrate(const ImuSample<Scalar>& sample, Scalar dt,
                 const ImuNoiseModel<Scalar>& noise) {
    if (!(dt > Scalar(0))) {
      throw std::invalid_argument("PreintegratedImu::integrate: dt must be positive");
    }
    if (!sample.gyro.allFinite() || !sample.accel.allFinite() ||
        !std::isfinite(sample.timestamp)) {
      throw std::invalid_argument("PreintegratedImu::integrate: non-finite sample");
    }
    if (num_samples_ > 0 && !(sample.timestamp > last_timestamp_)) {
      throw std::invalid_argument(
          "PreintegratedImu::integrate: timestamps must be strictly increasing");
    }
    noise.validate();

    const Vec3<Scalar> w = sample.gyro - bias_lin_.gyro;
    const Vec3<Scalar> a = sample.accel - bias_lin_.accel;
    const Mat3<Scalar> dr = delta_rotation_.matrix();
    const Mat3<Scalar> a_hat = hat(a);
    const Vec3<Scalar> w_dt = w * dt;
    const Mat3<Scalar> inc = exp_so3(w_dt).matrix();
    const Mat3<Scalar> jr = right_jacobian(w_dt);
    const Scalar dt2 = dt * dt;

    // Covariance recursion cov <- A cov A^T + B Sn B^T with the transition
    // assembled from the pre-update increments.
    Mat9 a_mat = Mat9::Identity();
    a_mat.template block<3, 3>(kPreRot, kPreRot) = inc.transpose();
    a_mat.template block<3, 3>(kPreVel, kPreRot) = -dr * a_hat * dt;
    a_mat.template block<3, 3>(kPrePos, kPreRot) = -Scalar(0.5) * dr * a_hat * dt2;
    a_mat.template block<3, 3>(kPrePos, kPreVel) = Mat3<Scalar>::Identity() * dt;

    Eigen::Matrix<Scalar, 9, 6> b_mat = Eigen::Matrix<Scalar, 9, 6>::Zero();
    b_mat.template block<3, 3>(kPreRot, 0) = jr * dt;
    b_mat.template block<3, 3>(kPreVel, 3) = dr * dt;
    b_mat.template block<3, 3>(kPrePos, 3) = Scalar(0.5) * dr * dt2;

    Eigen::Matrix<Scalar, 6, 6> sn = Eigen::Matrix<Scalar, 6, 6>::Zero();
    const Scalar g2 = noise.gyro_noise_density * noise.gyro_noise_density / dt;
    const Scalar a2 = noise.accel_noise_density * noise.accel_noise_density / dt;
    sn.template topLeftCorner<3, 3>() = Mat3<Scalar>::Identity() * g2;
    sn.template bottomRightCorner<3, 3>() = Mat3<Scalar>::Identity() * a2;

    cov_ = a_mat * cov_ * a_mat.transpose() + b_mat * sn * b_mat.transpose();
    cov_ = ((cov_ + cov_.transpose()) / Scalar(2)).eval();

    // Incremental bias Jacobians; position before velocity before rotation so
    // each uses the interval-start values of the others.
    j_pos_ba_ += j_vel_ba_ * dt - Scalar(0.5) * dr * dt2;
    j_pos_bg_ += j_vel_bg_ * dt - Scalar(0.5) * dr * a_hat * j_rot_bg_ * dt2;
    j_vel_ba_ -= dr * dt;
    j_vel_bg_ -= dr * a_hat * j_rot_bg_ * dt;
    j_rot_bg_ = inc.transpose() * j_rot_bg_ - jr * dt;

    delta_position_ += delta_velocity_ * dt + Scalar(0.5) * dr * a * dt2;
    delta_velocity_ += dr * a * dt;
    delta_rotation_ = Rotation<Scalar>::from_matrix_unchecked(dr * inc);

    dt_total_ += dt;
    last_timestamp_ = sample.timestamp;
    ++num_samples_;
  }

  const Rotation<Scalar>& delta_rotation() const { return delta_rotation_; }
  const Vec3<Scalar>& delta_velocity() const { return delta_velocity_; }
  const Vec3<Scalar>& delta_position() const { return delta_position_; }
  Scalar dt_total() const { return dt_total_; }
  const Mat9& cov() const { return cov_; }
  const ImuBias<Scalar>& bias_lin() const { return bias_lin_; }
  int num_samples() const { return num_samples_; }

  const Mat3<Scalar>& j_rot_bg() const { return j_rot_bg_; }
  const Mat3<Scalar>& j_vel_bg() const { return j_vel_bg_; }
  const Mat3<Scalar>& j_vel_ba() const { return j_vel_ba_; }
  const Mat3<Scalar>& j_pos_bg() const { return j_pos_bg_; }
  const Mat3<Scalar>& j_pos_ba() const { return j_pos_ba_; }

 private:
  Rotation<Scalar> delta_rotation_;
  Vec3<Scalar> delta_velocity_ = Vec3<Scalar>::Zero();
  Vec3<Scalar> delta_position_ = Vec3<Scalar>::Zero();
  Scalar dt_total_ = Scalar(0);
  Mat9 cov_ = Mat9::Zero();
  ImuBias<Scalar> bias_lin_;

  Mat3<Scalar> j_rot_bg_ = Mat3<Scalar>::Zero();
  Mat3<Scalar> j_vel_bg_ = Mat3<Scalar>::Zero();
  Mat3<Scalar> j_vel_ba_ = Mat3<Scalar>::Zero();
  Mat3<Scalar> j_pos_bg_ = Mat3<Scalar>::Zero();
  Mat3<Scalar> j_pos_ba_ = Mat3<Scalar>::Zero();

  Scalar last_timestamp_ = Scalar(0);
  int num_samples_ = 0;
};

using PreintegratedImud = PreintegratedImu<double>;

/// First-order update of the increments to a new bias estimate, using the
/// Jacobians stored at integration time.
template <typename Scalar>
PreintegratedDelta<Scalar> bias_corrected_delta(const PreintegratedImu<Scalar>& pre,
                                                const ImuBias<Scalar>& new_bias) {
  const Vec3<Scalar> dbg = new_bias.gyro - pre.bias_lin().gyro;
  const Vec3<Scalar> dba = new_bias.accel - pre.bias_lin().accel;
  PreintegratedDelta<Scalar> out;
  out.rotation = pre.delta_rotation() * exp_so3(Vec3<Scalar>(pre.j_rot_bg() * dbg));
  out.velocity = pre.delta_velocity() + pre.j_vel_bg() * dbg + pre.j_vel_ba() * dba;
  out.position = pre.delta_position() + pre.j_pos_bg() * dbg + pre.j_pos_ba() * dba;
  return out;
}

/// Solves the preintegrated measurement model for the state at the end of the
/// interval, assuming zero preintegration noise.
template <typename Scalar>
NavState<Scalar> predict(const NavState<Scalar>& state_i,
                         const PreintegratedImu<Scalar>& pre,
                         const Vec3<Scalar>& gravity) {
  const Scalar dt = pre.dt_total();
  NavState<Scalar> out;
  out.rotation = state_i.rotation * pre.delta_rotation();
  out.velocity = state_i.velocity + gravity * dt + state_i.rotation * pre.delta_velocity();
  out.position = state_i.position + state_i.velocity * dt +
                 Scalar(0.5) * gravity * dt * dt + state_i.rotation * pre.delta_position();
  out.bias = state_i.bias;
  return out;
}

/// Integrates a whole stream into a fresh accumulator.
template <typename Scalar>
PreintegratedImu<Scalar> integrate_stream(const std::vector<ImuSample<Scalar>>& samples,
                                          const std::vector<Scalar>& dts,
                                          const ImuBias<Scalar>& bias_lin,
                                          const ImuNoiseModel<Scalar>& noise) {
  if (samples.size() != dts.size()) {
    throw std::invalid_argument("integrate_stream: samples and dts differ in length");
  }
  PreintegratedImu<Scalar> pre(bias_lin);
  for (size_t k = 0; k < samples.size(); ++k) pre.integrate(samples[k], dts[k], noise);
  return pre;
}

/// Covariance of the preintegrated measurements evaluated from the
/// non-iterative noise sums: every sample's 9x6 linear map onto
/// [dphi_ij, dv_ij, dp_ij] is formed directly and the weighted outer
/// products are accumulated. Algebraically equal to the iterative recursion;
/// kept as an independent cross-check of it.
template <typename Scalar>
Eigen::Matrix<Scalar, 9, 9> covariance_batch_oracle(
    const std::vector<ImuSample<Scalar>>& samples, const std::vector<Scalar>& dts,
    const ImuBias<Scalar>& bias_lin, const ImuNoiseModel<Scalar>& noise) {
  using Mat9 = Eigen::Matrix<Scalar, 9, 9>;
  if (samples.size() != dts.size()) {
    throw std::invalid_argument("covariance_batch_oracle: samples and dts differ in length");
  }
  noise.validate();
  const int n = static_cast<int>(samples.size());
  Mat9 cov = Mat9::Zero();
  if (n == 0) return cov;

  // Prefix rotations dR_{i,k} and per-step ingredients.
  std::vector<Mat3<Scalar>> prefix(n + 1);
  std::vector<Mat3<Scalar>> jr(n), a_hat(n);
  prefix[0] = Mat3<Scalar>::Identity();
  for (int k = 0; k < n; ++k) {
    const Vec3<Scalar> w_dt = (samples[k].gyro - bias_lin.gyro) * dts[k];
    prefix[k + 1] = prefix[k] * exp_so3(w_dt).matrix();
    jr[k] = right_jacobian(w_dt);
    a_hat[k] = hat(Vec3<Scalar>(samples[k].accel - bias_lin.accel));
  }

  for (int k = 0; k < n; ++k) {
    const Scalar dt = dts[k];
    // Map of the gyro noise at step k into the final [dphi, dv, dp].
    const Mat3<Scalar> seed = prefix[k + 1] * jr[k] * dt;  // dphi_im = prefix[m]^T * seed
    Mat3<Scalar> dp_gyro = Mat3<Scalar>::Zero();
    Mat3<Scalar> dv_gyro = Mat3<Scalar>::Zero();  // running d dv_im / d eta_g,k
    for (int m = k + 1; m < n; ++m) {
      const Mat3<Scalar> g_m = prefix[m].transpose() * seed;
      const Mat3<Scalar> coupled = prefix[m] * a_hat[m] * g_m;
      dp_gyro += dv_gyro * dts[m] - Scalar(0.5) * coupled * dts[m] * dts[m];
      dv_gyro -= coupled * dts[m];
    }
    const Mat3<Scalar> dphi_gyro = prefix[n].transpose() * seed;

    // Map of the accel noise at step k.
    const Mat3<Scalar> dv_acc = prefix[k] * dt;
    Mat3<Scalar> dp_acc = Scalar(0.5) * prefix[k] * dt * dt;
    for (int m = k + 1; m < n; ++m) dp_acc += dv_acc * dts[m];

    Eigen::Matrix<Scalar, 9, 6> map = Eigen::Matrix<Scalar, 9, 6>::Zero();
    map.template block<3, 3>(kPreRot, 0) = dphi_gyro;
    map.template block<3, 3>(kPreVel, 0) = dv_gyro;
    map.template block<3, 3>(kPrePos, 0) = dp_gyro;
    map.template block<3, 3>(kPreVel, 3) = dv_acc;
    map.template block<3, 3>(kPrePos, 3) = dp_acc;

    Eigen::Matrix<Scalar, 6, 6> sn = Eigen::Matrix<Scalar, 6, 6>::Zero();
    sn.template topLeftCorner<3, 3>() =
        Mat3<Scalar>::Identity() * noise.gyro_noise_density * noise.gyro_noise_density / dt;
    sn.template bottomRightCorner<3, 3>() =
        Mat3<Scalar>::Identity() * noise.accel_noise_density * noise.accel_noise_density / dt;
    cov += map * sn * map.transpose();
  }
  return ((cov + cov.transpose()) / Scalar(2)).eval();
}

}  // namespace pivio
