#include "pivio/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pivio {

void SimConfig::validate() const {
  trajectory.validate();
  noise.validate();
  camera.validate();
  if (!(imu_rate >= keyframe_rate) || !(keyframe_rate > 0.0)) {
    throw std::invalid_argument("SimConfig: imu_rate must be at least keyframe_rate");
  }
  const double ratio = imu_rate / keyframe_rate;
  if (std::abs(ratio - std::round(ratio)) > 1e-9) {
    throw std::invalid_argument("SimConfig: imu_rate must be an integer multiple of keyframe_rate");
  }
  if (!(pixel_sigma >= 0.0)) throw std::invalid_argument("SimConfig: pixel_sigma must be non-negative");
  if (max_obs_per_frame < 1) throw std::invalid_argument("SimConfig: max_obs_per_frame must be positive");
  if (landmarks.count < 1) throw std::invalid_argument("SimConfig: landmark count must be positive");
  if (!(landmarks.room_half_extent > trajectory.radius)) {
    throw std::invalid_argument("SimConfig: room must enclose the trajectory");
  }
  if (!(initial_bias_sigma >= 0.0)) {
    throw std::invalid_argument("SimConfig: initial_bias_sigma must be non-negative");
  }
}

int SimConfig::keyframe_count() const {
  return static_cast<int>(std::floor(trajectory.duration * keyframe_rate + 1e-9));
}

int SimConfig::samples_per_interval() const {
  return static_cast<int>(std::round(imu_rate / keyframe_rate));
}

namespace {

Vec3d gauss3(std::mt19937_64& rng, std::normal_distribution<double>& n) {
  const double a = n(rng), b = n(rng), c = n(rng);
  return Vec3d(a, b, c);
}

}  // namespace

void synthesize_imu(const SimConfig& config, std::mt19937_64& rng,
                    std::vector<ImuSampled>* samples, std::vector<double>* dts,
                    std::vector<ImuBiasd>* bias_trajectory) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double dt = 1.0 / config.imu_rate;
  const int n = (config.keyframe_count() - 1) * config.samples_per_interval();
  samples->clear();
  dts->clear();
  bias_trajectory->clear();
  samples->reserve(n);
  dts->assign(n, dt);
  bias_trajectory->reserve(n);

  ImuBiasd bias;
  bias.gyro = config.initial_bias_sigma * gauss3(rng, gauss);
  bias.accel = config.initial_bias_sigma * gauss3(rng, gauss);

  const double sg = config.noise.gyro_noise_density / std::sqrt(dt);
  const double sa = config.noise.accel_noise_density / std::sqrt(dt);
  const double sbg = config.noise.gyro_bias_density * std::sqrt(dt);
  const double sba = config.noise.accel_bias_density * std::sqrt(dt);

  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    const TrajectorySample truth = analytic_state(config.trajectory, t);
    ImuSampled s;
    s.timestamp = t;
    s.gyro = truth.body_omega + bias.gyro + sg * gauss3(rng, gauss);
    s.accel = truth.rotation.inverse() * (truth.world_accel - config.gravity) +
              bias.accel + sa * gauss3(rng, gauss);
    samples->push_back(s);
    bias_trajectory->push_back(bias);
    bias.gyro += sbg * gauss3(rng, gauss);
    bias.accel += sba * gauss3(rng, gauss);
  }
}

std::vector<Vec3d> make_landmarks(const SimConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> along(-config.landmarks.room_half_extent,
                                               config.landmarks.room_half_extent);
  std::uniform_real_distribution<double> height(config.landmarks.min_height,
                                                config.landmarks.max_height);
  const double wall = config.landmarks.room_half_extent;
  std::vector<Vec3d> out;
  out.reserve(config.landmarks.count);
  for (int i = 0; i < config.landmarks.count; ++i) {
    const double s = along(rng);
    const double h = height(rng);
    switch (i % 4) {
      case 0: out.emplace_back(wall, s, h); break;
      case 1: out.emplace_back(-wall, s, h); break;
      case 2: out.emplace_back(s, wall, h); break;
      default: out.emplace_back(s, -wall, h); break;
    }
  }
  return out;
}

std::vector<LandmarkTrack> synthesize_tracks(const SimConfig& config,
                                             const std::vector<NavStated>& ground_truth,
                                             const std::vector<Vec3d>& landmarks,
                                             std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<LandmarkTrack> tracks(landmarks.size());
  for (size_t l = 0; l < landmarks.size(); ++l) {
    tracks[l].landmark_id = static_cast<long>(l);
  }

  std::vector<int> visible;
  std::vector<Eigen::Vector2d> pixels;
  for (size_t kf = 0; kf < ground_truth.size(); ++kf) {
    visible.clear();
    pixels.clear();
    for (size_t l = 0; l < landmarks.size(); ++l) {
      auto uv = project(ground_truth[kf], config.camera, landmarks[l]);
      if (!uv) continue;
      if ((*uv)(0) < 0.0 || (*uv)(0) > config.image_width || (*uv)(1) < 0.0 ||
          (*uv)(1) > config.image_height) {
        continue;
      }
      visible.push_back(static_cast<int>(l));
      pixels.push_back(*uv);
    }
    std::vector<int> order(visible.size());
    std::iota(order.begin(), order.end(), 0);
    if (static_cast<int>(order.size()) > config.max_obs_per_frame) {
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(config.max_obs_per_frame);
      std::sort(order.begin(), order.end());
    }
    for (int idx : order) {
      TrackObservation obs;
      obs.keyframe_id = static_cast<int>(kf);
      obs.pixel = pixels[idx];
      obs.pixel_sigma = std::max(config.pixel_sigma, 1e-6);
      if (config.pixel_sigma > 0.0) {
        obs.pixel += config.pixel_sigma * Eigen::Vector2d(gauss(rng), gauss(rng));
      }
      tracks[visible[idx]].observations.push_back(obs);
    }
  }

  std::vector<LandmarkTrack> seen;
  seen.reserve(tracks.size());
  for (LandmarkTrack& t : tracks) {
    if (!t.observations.empty()) seen.push_back(std::move(t));
  }
  return seen;
}

SimDataset make_dataset(const SimConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);

  SimDataset data;
  data.config = config;
  synthesize_imu(config, rng, &data.imu, &data.imu_dt, &data.bias_trajectory);

  const int kf_count = config.keyframe_count();
  const int per_interval = config.samples_per_interval();
  data.keyframe_times.resize(kf_count);
  for (int k = 0; k < kf_count; ++k) data.keyframe_times[k] = k / config.keyframe_rate;

  data.ground_truth.resize(kf_count);
  if (!config.discrete_ground_truth) {
    for (int k = 0; k < kf_count; ++k) {
      const TrajectorySample s = analytic_state(config.trajectory, data.keyframe_times[k]);
      data.ground_truth[k].rotation = s.rotation;
      data.ground_truth[k].position = s.position;
      data.ground_truth[k].velocity = s.velocity;
    }
  } else {
    // Roll the clean signals through the discrete model and measure the
    // specific force in the rolled-out frame, so the whole chain closes
    // exactly. The roll of v and p with the world acceleration equals the
    // discrete model driven by those measurements.
    const TrajectorySample s0 = analytic_state(config.trajectory, 0.0);
    NavStated x;
    x.rotation = s0.rotation;
    x.position = s0.position;
    x.velocity = s0.velocity;
    data.ground_truth[0] = x;
    const double dt = 1.0 / config.imu_rate;
    for (int k = 0; k < static_cast<int>(data.imu.size()); ++k) {
      const double t = data.imu[k].timestamp;
      const TrajectorySample truth = analytic_state(config.trajectory, t);
      const Vec3d noise_part =
          data.imu[k].accel - data.bias_trajectory[k].accel -
          truth.rotation.inverse() * (truth.world_accel - config.gravity);
      data.imu[k].accel = x.rotation.inverse() * (truth.world_accel - config.gravity) +
                          data.bias_trajectory[k].accel + noise_part;
      x.position += x.velocity * dt + 0.5 * truth.world_accel * dt * dt;
      x.velocity += truth.world_accel * dt;
      x.rotation = x.rotation * exp_so3(Vec3d(truth.body_omega * dt));
      if ((k + 1) % per_interval == 0) data.ground_truth[(k + 1) / per_interval] = x;
    }
  }
  for (int k = 0; k < kf_count; ++k) {
    const int idx = std::min<int>(k * per_interval, std::max<int>(0, data.bias_trajectory.size() - 1));
    if (!data.bias_trajectory.empty()) data.ground_truth[k].bias = data.bias_trajectory[idx];
  }

  data.landmarks = make_landmarks(config, rng);
  data.tracks = synthesize_tracks(config, data.ground_truth, data.landmarks, rng);
  return data;
}

}  // namespace pivio
