#pragma once

#include "pivio/so3.hpp"

#include <stdexcept>

namespace pivio {

/// One raw IMU reading: measured angular rate and specific force at a
/// timestamp. Timestamps must be strictly increasing within a stream.
template <typename Scalar>
struct ImuSample {
  Scalar timestamp = Scalar(0);             // s
  Vec3<Scalar> gyro = Vec3<Scalar>::Zero();   // rad/s
  Vec3<Scalar> accel = Vec3<Scalar>::Zero();  // m/s^2
};

/// Gyroscope and accelerometer biases.
template <typename Scalar>
struct ImuBias {
  Vec3<Scalar> gyro = Vec3<Scalar>::Zero();   // rad/s
  Vec3<Scalar> accel = Vec3<Scalar>::Zero();  // m/s^2
};

/// Continuous-time noise densities. Measurement noise discretizes as
/// density^2 / dt per sample; bias random walk as density^2 * dt over a
/// keyframe interval.
template <typename Scalar>
struct ImuNoiseModel {
  Scalar gyro_noise_density = Scalar(0);   // rad/(s sqrt(Hz))
  Scalar accel_noise_density = Scalar(0);  // m/(s^2 sqrt(Hz))
  Scalar gyro_bias_density = Scalar(0);    // rad/(s^2 sqrt(Hz))
  Scalar accel_bias_density = Scalar(0);   // m/(s^3 sqrt(Hz))

  void validate() const {
    if (!(gyro_noise_density > Scalar(0)) || !(accel_noise_density > Scalar(0)) ||
        !(gyro_bias_density > Scalar(0)) || !(accel_bias_density > Scalar(0))) {
      throw std::invalid_argument("ImuNoiseModel: densities must be strictly positive");
    }
  }
};

using ImuSampled = ImuSample<double>;
using ImuBiasd = ImuBias<double>;
using ImuNoiseModeld = ImuNoiseModel<double>;

}  // namespace pivio
