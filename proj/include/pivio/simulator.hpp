#pragma once

#include "pivio/camera.hpp"
#include "pivio/imu_types.hpp"
#include "pivio/nav_state.hpp"
#include "pivio/trajectory.hpp"
#include "pivio/vision_factor.hpp"

#include <random>
#include <vector>

namespace pivio {

/// Landmarks are spread over the four walls of a square room enclosing the
/// trajectory.
struct LandmarkLayout {
  int count = 800;
  double room_half_extent = 5.0;  // m, walls at +-extent
  double min_height = 0.0;        // m
  double max_height = 4.0;        // m
};

struct SimConfig {
  TrajectoryParams trajectory;
  double imu_rate = 200.0;      // Hz
  double keyframe_rate = 2.5;   // Hz
  ImuNoiseModeld noise{0.0007, 0.019, 0.0004, 0.012};
  double pixel_sigma = 1.0;     // px
  int max_obs_per_frame = 50;
  uint64_t seed = 1;
  LandmarkLayout landmarks;
  CameraModeld camera;
  double image_width = 640.0;   // px visibility bound
  double image_height = 480.0;
  double initial_bias_sigma = 0.02;  // per-axis draw of the starting bias
  Vec3d gravity = Vec3d(0, 0, -9.81);
  // When set, keyframe ground truth is the discrete roll-out of the clean
  // sample stream instead of the analytic states, making a noise-free dataset
  // exactly consistent with the integration model.
  bool discrete_ground_truth = false;

  SimConfig() {
    Mat3d r_bc;
    r_bc << 0, 0, 1, -1, 0, 0, 0, -1, 0;  // camera looks along body x
    camera.focal = 315.0;
    camera.principal_point = Eigen::Vector2d(320.0, 240.0);
    camera.body_from_camera =
        Posed(Rotationd::from_matrix_unchecked(r_bc), Vec3d(0.05, 0.0, 0.02));
  }

  void validate() const;
  int keyframe_count() const;
  int samples_per_interval() const;
};

struct SimDataset {
  SimConfig config;
  std::vector<double> keyframe_times;
  std::vector<NavStated> ground_truth;   // per keyframe, bias included
  std::vector<ImuSampled> imu;
  std::vector<double> imu_dt;            // per-sample integration interval
  std::vector<ImuBiasd> bias_trajectory; // bias applied at each sample
  std::vector<Vec3d> landmarks;
  std::vector<LandmarkTrack> tracks;
};

/// Noisy IMU stream over the configured trajectory plus the bias random walk
/// that corrupted it. Consumes the generator in a fixed order.
void synthesize_imu(const SimConfig& config, std::mt19937_64& rng,
                    std::vector<ImuSampled>* samples, std::vector<double>* dts,
                    std::vector<ImuBiasd>* bias_trajectory);

std::vector<Vec3d> make_landmarks(const SimConfig& config, std::mt19937_64& rng);

/// Per-keyframe observations: project all landmarks at ground truth, keep the
/// visible ones, subsample to the per-frame budget, add pixel noise.
std::vector<LandmarkTrack> synthesize_tracks(const SimConfig& config,
                                             const std::vector<NavStated>& ground_truth,
                                             const std::vector<Vec3d>& landmarks,
                                             std::mt19937_64& rng);

/// Full dataset generation; bit-identical for identical config and seed.
SimDataset make_dataset(const SimConfig& config);

}  // namespace pivio
