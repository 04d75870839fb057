#pragma once

#include <pivio/imu_types.hpp>
#include <pivio/nav_state.hpp>
#include <pivio/preintegration.hpp>

#include <functional>
#include <random>
#include <vector>

namespace pivio::testing {

struct ImuStream {
  std::vector<ImuSampled> samples;
  std::vector<double> dts;
};

/// Builds a stream of n samples spaced dt apart; gyro/accel given as
/// functions of the sample start time.
inline ImuStream make_stream(int n, double dt,
                             const std::function<Vec3d(double)>& gyro,
                             const std::function<Vec3d(double)>& accel) {
  ImuStream s;
  s.samples.reserve(n);
  s.dts.assign(n, dt);
  for (int k = 0; k < n; ++k) {
    double t = k * dt;
    s.samples.push_back({t, gyro(t), accel(t)});
  }
  return s;
}

inline ImuStream random_stream(std::mt19937_64& rng, int n, double dt,
                               double gyro_scale = 1.0, double accel_scale = 3.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec3d w0(u(rng), u(rng), u(rng)), w1(u(rng), u(rng), u(rng));
  Vec3d a0(u(rng), u(rng), u(rng)), a1(u(rng), u(rng), u(rng));
  return make_stream(
      n, dt,
      [=](double t) { return gyro_scale * (w0 + w1 * std::sin(3.0 * t)); },
      [=](double t) { return accel_scale * (a0 + a1 * std::cos(2.0 * t)); });
}

/// Adds white measurement noise discretized as density/sqrt(dt) per sample.
inline ImuStream add_noise(const ImuStream& clean, const ImuNoiseModeld& noise,
                           std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  ImuStream out = clean;
  for (size_t k = 0; k < out.samples.size(); ++k) {
    double sg = noise.gyro_noise_density / std::sqrt(out.dts[k]);
    double sa = noise.accel_noise_density / std::sqrt(out.dts[k]);
    for (int i = 0; i < 3; ++i) {
      out.samples[k].gyro(i) += sg * gauss(rng);
      out.samples[k].accel(i) += sa * gauss(rng);
    }
  }
  return out;
}

inline PreintegratedImud preintegrate(const ImuStream& s, const ImuBiasd& bias,
                                      const ImuNoiseModeld& noise) {
  return integrate_stream(s.samples, s.dts, bias, noise);
}

/// Per-sample forward integration of the discrete motion model; the oracle
/// for predict().
inline NavStated direct_integrate(const NavStated& x0, const ImuStream& s,
                                  const ImuBiasd& bias, const Vec3d& gravity) {
  NavStated x = x0;
  for (size_t k = 0; k < s.samples.size(); ++k) {
    double dt = s.dts[k];
    Vec3d w = s.samples[k].gyro - bias.gyro;
    Vec3d a = s.samples[k].accel - bias.accel;
    Vec3d acc_w = x.rotation * a;
    x.position += x.velocity * dt + 0.5 * gravity * dt * dt + 0.5 * acc_w * dt * dt;
    x.velocity += gravity * dt + acc_w * dt;
    x.rotation = x.rotation * exp_so3(Vec3d(w * dt));
  }
  return x;
}

inline ImuNoiseModeld paper_noise() {
  return ImuNoiseModeld{0.0007, 0.019, 0.0004, 0.012};
}

}  // namespace pivio::testing

#include <pivio/factor_graph.hpp>

namespace pivio::testing {

struct SceneOptions {
  int keyframes = 8;
  double keyframe_dt = 0.4;
  double imu_dt = 0.01;
  double radius = 3.0;
  double yaw_rate = 0.5;        // rad/s
  int landmarks = 60;
  double pixel_noise = 0.0;     // px
  double imu_noise_scale = 0.0; // 0 = noise-free measurements
  ImuBiasd true_bias;
  uint64_t seed = 99;
};

struct TestScene {
  FactorGraph graph;                 // states member left empty
  std::vector<NavStated> ground_truth;
  std::vector<Vec3d> landmarks;
};

/// Builds a factor graph whose measurements are exactly consistent with the
/// ground-truth states: IMU samples come from an analytic circle, keyframe
/// states from the discrete roll-out of those samples, and pixels from exact
/// projection. Optional noise on top.
inline TestScene make_scene(const SceneOptions& opt) {
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  TestScene scene;
  FactorGraph& graph = scene.graph;
  graph.noise = paper_noise();
  graph.gravity = Vec3d(0, 0, -9.81);

  Mat3d r_bc;
  r_bc << 0, 0, 1, -1, 0, 0, 0, -1, 0;  // camera z forward along body x
  graph.camera.focal = 315.0;
  graph.camera.principal_point = Eigen::Vector2d(320, 240);
  graph.camera.body_from_camera =
      Posed(Rotationd::from_matrix_unchecked(r_bc), Vec3d(0.05, 0.0, 0.02));

  // Analytic generator: circle with sinusoidal vertical motion, tangent
  // heading. The vertical excitation keeps all non-gauge directions
  // observable.
  const double speed = opt.radius * opt.yaw_rate;
  const double vert_amp = 0.4, vert_w = 2 * M_PI * 0.35;
  auto gyro_at = [&](double) { return Vec3d(0, 0, opt.yaw_rate); };
  auto accel_world_at = [&](double t) {
    return Vec3d(-opt.radius * opt.yaw_rate * opt.yaw_rate * std::cos(opt.yaw_rate * t),
                 -opt.radius * opt.yaw_rate * opt.yaw_rate * std::sin(opt.yaw_rate * t),
                 vert_amp * vert_w * vert_w * std::cos(vert_w * t));
  };

  NavStated x;
  x.rotation = exp_so3(Vec3d(0, 0, M_PI / 2));
  x.position = Vec3d(opt.radius, 0, 1.0);
  x.velocity = Vec3d(0, speed, vert_amp * vert_w * std::sin(0.0));
  x.bias = opt.true_bias;
  scene.ground_truth.push_back(x);

  const int steps_per_kf = static_cast<int>(std::round(opt.keyframe_dt / opt.imu_dt));
  double t = 0.0;
  for (int kf = 0; kf + 1 < opt.keyframes; ++kf) {
    ImuChainFactor factor;
    factor.i = kf;
    factor.j = kf + 1;
    factor.pre = PreintegratedImud(ImuBiasd{});  // integrated at zero bias
    for (int s = 0; s < steps_per_kf; ++s) {
      Vec3d w = gyro_at(t);
      Vec3d a = x.rotation.inverse() * (accel_world_at(t) - graph.gravity);
      // Advance the discrete ground truth with the clean signals.
      Vec3d acc_w = x.rotation * a;
      x.position += x.velocity * opt.imu_dt + 0.5 * (graph.gravity + acc_w) * opt.imu_dt * opt.imu_dt;
      x.velocity += (graph.gravity + acc_w) * opt.imu_dt;
      x.rotation = x.rotation * exp_so3(Vec3d(w * opt.imu_dt));
      // Measurement = clean + bias + optional white noise.
      ImuSampled sample;
      sample.timestamp = t;
      sample.gyro = w + opt.true_bias.gyro;
      sample.accel = a + opt.true_bias.accel;
      if (opt.imu_noise_scale > 0.0) {
        double sg = opt.imu_noise_scale * graph.noise.gyro_noise_density / std::sqrt(opt.imu_dt);
        double sa = opt.imu_noise_scale * graph.noise.accel_noise_density / std::sqrt(opt.imu_dt);
        sample.gyro += sg * Vec3d(gauss(rng), gauss(rng), gauss(rng));
        sample.accel += sa * Vec3d(gauss(rng), gauss(rng), gauss(rng));
      }
      factor.pre.integrate(sample, opt.imu_dt, graph.noise);
      t += opt.imu_dt;
    }
    graph.imu_factors.push_back(std::move(factor));
    scene.ground_truth.push_back(x);
  }

  // Landmarks on a cylinder around the trajectory.
  std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
  std::uniform_real_distribution<double> height(0.0, 3.0);
  for (int l = 0; l < opt.landmarks; ++l) {
    double a = angle(rng);
    scene.landmarks.push_back(Vec3d(8.0 * std::cos(a), 8.0 * std::sin(a), height(rng)));
  }

  for (int l = 0; l < static_cast<int>(scene.landmarks.size()); ++l) {
    LandmarkTrack track;
    track.landmark_id = l;
    for (int kf = 0; kf < opt.keyframes; ++kf) {
      auto uv = project(scene.ground_truth[kf], graph.camera, scene.landmarks[l]);
      if (!uv) continue;
      if ((*uv)(0) < 0 || (*uv)(0) > 640 || (*uv)(1) < 0 || (*uv)(1) > 480) continue;
      TrackObservation obs;
      obs.keyframe_id = kf;
      obs.pixel = *uv;
      obs.pixel_sigma = std::max(opt.pixel_noise, 1.0);
      if (opt.pixel_noise > 0.0) {
        obs.pixel += opt.pixel_noise * Eigen::Vector2d(gauss(rng), gauss(rng));
      }
      track.observations.push_back(obs);
    }
    if (!track.observations.empty()) graph.tracks.push_back(std::move(track));
  }

  PriorFactor prior;
  prior.mean = scene.ground_truth[0];
  prior.covariance = Mat15d::Identity();
  prior.covariance.block<3, 3>(kIdxRot, kIdxRot) *= 1e-4;
  prior.covariance.block<3, 3>(kIdxPos, kIdxPos) *= 1e-6;
  prior.covariance.block<3, 3>(kIdxVel, kIdxVel) *= 1e-4;
  prior.covariance.block<3, 3>(kIdxBg, kIdxBg) *= 4e-4;
  prior.covariance.block<3, 3>(kIdxBa, kIdxBa) *= 4e-4;
  graph.prior = prior;
  return scene;
}

}  // namespace pivio::testing
