#pragma once

#include "pivio/so3.hpp"

#include <stdexcept>

namespace pivio {

/// Circle of given radius with sinusoidal vertical motion. Heading stays
/// tangent to the circle; roll and pitch are zero.
struct TrajectoryParams {
  double radius = 3.0;           // m
  double angular_rate = 1.0 / 3.0;  // rad/s around the circle
  double vertical_amplitude = 0.4;  // m
  double vertical_frequency = 0.2;  // Hz
  double duration = 120.0;          // s

  void validate() const {
    if (!(radius > 0.0) || !(duration > 0.0)) {
      throw std::invalid_argument("TrajectoryParams: radius and duration must be positive");
    }
  }

  /// Planar path length (the vertical contribution is ignored by design).
  double path_length() const { return radius * angular_rate * duration; }
};

struct TrajectorySample {
  Rotationd rotation;       // world from body
  Vec3d position;           // m
  Vec3d velocity;           // m/s
  Vec3d body_omega;         // rad/s, vee(R^T dR/dt)
  Vec3d world_accel;        // m/s^2
};

/// Closed-form state of the parametric trajectory at time t.
inline TrajectorySample analytic_state(const TrajectoryParams& params, double t) {
  const double w = params.angular_rate;
  const double r = params.radius;
  const double wv = 2.0 * M_PI * params.vertical_frequency;
  const double a = params.vertical_amplitude;

  TrajectorySample s;
  s.position = Vec3d(r * std::cos(w * t), r * std::sin(w * t), a * (1.0 - std::cos(wv * t)));
  s.velocity = Vec3d(-r * w * std::sin(w * t), r * w * std::cos(w * t), a * wv * std::sin(wv * t));
  s.world_accel = Vec3d(-r * w * w * std::cos(w * t), -r * w * w * std::sin(w * t),
                        a * wv * wv * std::cos(wv * t));
  // Yaw follows the tangent; with R = Rz(psi), vee(R^T dR/dt) = [0, 0, dpsi].
  s.rotation = exp_so3(Vec3d(0, 0, w * t + M_PI / 2));
  s.body_omega = Vec3d(0, 0, w);
  return s;
}

}  // namespace pivio
