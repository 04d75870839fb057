#pragma once

#include "pivio/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace pivio {

/// Raised on malformed configuration input; the message names the field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EstimatorConfig {
  double prior_rotation_sigma = 1e-2;  // rad
  double prior_position_sigma = 1e-3;  // m
  double prior_velocity_sigma = 1e-2;  // m/s
  double prior_bias_sigma = 0.02;      // matches the simulated initial-bias draw
  double rel_tol = 1e-8;
  int max_iters = 50;
  int init_chunk = 20;    // keyframes per incremental warm-up chunk
  int chunk_iters = 2;    // solver iterations per chunk
};

struct RunConfig {
  SimConfig sim;
  EstimatorConfig estimator;
};

/// Parses a nested key-value configuration. The imu noise block is required;
/// everything else falls back to the documented defaults. The trajectory
/// angular rate, when absent, is derived from path_length/(radius*duration).
RunConfig parse_config(const nlohmann::json& j);

/// Fully resolved snapshot: serializing and re-parsing yields the same run.
nlohmann::json to_json(const RunConfig& config);

RunConfig load_config_file(const std::filesystem::path& path);

}  // namespace pivio
