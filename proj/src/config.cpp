#include "pivio/config.hpp"

#include <fstream>

namespace pivio {

namespace {

using nlohmann::json;

const json* find(const json& j, const std::string& key) {
  auto it = j.find(key);
  return it == j.end() ? nullptr : &*it;
}

double require_number(const json& j, const std::string& section, const char* field) {
  const json* v = find(j, field);
  if (!v || !v->is_number()) {
    throw ConfigError("config: missing or non-numeric field " + section + "." + field);
  }
  return v->get<double>();
}

double number_or(const json& j, const char* field, double fallback) {
  const json* v = find(j, field);
  if (!v) return fallback;
  if (!v->is_number()) throw ConfigError(std::string("config: non-numeric field ") + field);
  return v->get<double>();
}

Vec3d vec3_or(const json& j, const char* field, const Vec3d& fallback) {
  const json* v = find(j, field);
  if (!v) return fallback;
  if (!v->is_array() || v->size() != 3) {
    throw ConfigError(std::string("config: field ") + field + " must be a 3-array");
  }
  return Vec3d((*v)[0].get<double>(), (*v)[1].get<double>(), (*v)[2].get<double>());
}

}  // namespace

RunConfig parse_config(const nlohmann::json& j) {
  RunConfig out;
  SimConfig& sim = out.sim;

  if (const json* t = find(j, "trajectory")) {
    sim.trajectory.radius = number_or(*t, "radius", sim.trajectory.radius);
    sim.trajectory.duration = number_or(*t, "duration", sim.trajectory.duration);
    sim.trajectory.vertical_amplitude =
        number_or(*t, "vertical_amplitude", sim.trajectory.vertical_amplitude);
    sim.trajectory.vertical_frequency =
        number_or(*t, "vertical_frequency", sim.trajectory.vertical_frequency);
    if (find(*t, "angular_rate")) {
      sim.trajectory.angular_rate = number_or(*t, "angular_rate", 0.0);
    } else {
      const double path = number_or(*t, "path_length", 120.0);
      sim.trajectory.angular_rate =
          path / (sim.trajectory.radius * sim.trajectory.duration);
    }
  }

  const json* imu = find(j, "imu");
  if (!imu) throw ConfigError("config: missing section imu");
  sim.noise.gyro_noise_density = require_number(*imu, "imu", "gyro_noise_density");
  sim.noise.accel_noise_density = require_number(*imu, "imu", "accel_noise_density");
  sim.noise.gyro_bias_density = require_number(*imu, "imu", "gyro_bias_density");
  sim.noise.accel_bias_density = require_number(*imu, "imu", "accel_bias_density");
  sim.imu_rate = number_or(*imu, "rate", sim.imu_rate);
  sim.initial_bias_sigma = number_or(*imu, "initial_bias_sigma", sim.initial_bias_sigma);

  if (const json* k = find(j, "keyframes")) {
    sim.keyframe_rate = number_or(*k, "rate", sim.keyframe_rate);
  }

  if (const json* c = find(j, "camera")) {
    sim.camera.focal = number_or(*c, "focal", sim.camera.focal);
    sim.camera.principal_point(0) = number_or(*c, "cx", sim.camera.principal_point(0));
    sim.camera.principal_point(1) = number_or(*c, "cy", sim.camera.principal_point(1));
    sim.image_width = number_or(*c, "width", sim.image_width);
    sim.image_height = number_or(*c, "height", sim.image_height);
    sim.pixel_sigma = number_or(*c, "pixel_sigma", sim.pixel_sigma);
    sim.max_obs_per_frame =
        static_cast<int>(number_or(*c, "max_obs_per_frame", sim.max_obs_per_frame));
    if (const json* r = find(*c, "r_bc")) {
      if (!r->is_array() || r->size() != 9) {
        throw ConfigError("config: camera.r_bc must be a 9-array (row-major)");
      }
      Mat3d m;
      for (int i = 0; i < 3; ++i)
        for (int jj = 0; jj < 3; ++jj) m(i, jj) = (*r)[3 * i + jj].get<double>();
      sim.camera.body_from_camera.rotation = Rotationd(m);
    }
    sim.camera.body_from_camera.translation =
        vec3_or(*c, "p_bc", sim.camera.body_from_camera.translation);
  }

  if (const json* l = find(j, "landmarks")) {
    sim.landmarks.count = static_cast<int>(number_or(*l, "count", sim.landmarks.count));
    sim.landmarks.room_half_extent =
        number_or(*l, "room_half_extent", sim.landmarks.room_half_extent);
    sim.landmarks.min_height = number_or(*l, "min_height", sim.landmarks.min_height);
    sim.landmarks.max_height = number_or(*l, "max_height", sim.landmarks.max_height);
  }

  if (const json* g = find(j, "ground_truth")) {
    if (const json* d = find(*g, "discrete")) sim.discrete_ground_truth = d->get<bool>();
  }

  sim.gravity = vec3_or(j, "gravity", sim.gravity);
  if (const json* s = find(j, "seed")) sim.seed = s->get<uint64_t>();

  EstimatorConfig& est = out.estimator;
  if (const json* e = find(j, "estimator")) {
    est.prior_rotation_sigma = number_or(*e, "prior_rotation_sigma", est.prior_rotation_sigma);
    est.prior_position_sigma = number_or(*e, "prior_position_sigma", est.prior_position_sigma);
    est.prior_velocity_sigma = number_or(*e, "prior_velocity_sigma", est.prior_velocity_sigma);
    est.prior_bias_sigma = number_or(*e, "prior_bias_sigma", sim.initial_bias_sigma);
    est.rel_tol = number_or(*e, "rel_tol", est.rel_tol);
    est.max_iters = static_cast<int>(number_or(*e, "max_iters", est.max_iters));
    est.init_chunk = static_cast<int>(number_or(*e, "init_chunk", est.init_chunk));
    est.chunk_iters = static_cast<int>(number_or(*e, "chunk_iters", est.chunk_iters));
  } else {
    est.prior_bias_sigma = sim.initial_bias_sigma;
  }

  sim.validate();
  return out;
}

nlohmann::json to_json(const RunConfig& config) {
  const SimConfig& sim = config.sim;
  const EstimatorConfig& est = config.estimator;
  nlohmann::json j;
  j["trajectory"] = {{"radius", sim.trajectory.radius},
                     {"duration", sim.trajectory.duration},
                     {"angular_rate", sim.trajectory.angular_rate},
                     {"path_length", sim.trajectory.path_length()},
                     {"vertical_amplitude", sim.trajectory.vertical_amplitude},
                     {"vertical_frequency", sim.trajectory.vertical_frequency}};
  j["imu"] = {{"rate", sim.imu_rate},
              {"gyro_noise_density", sim.noise.gyro_noise_density},
              {"accel_noise_density", sim.noise.accel_noise_density},
              {"gyro_bias_density", sim.noise.gyro_bias_density},
              {"accel_bias_density", sim.noise.accel_bias_density},
              {"initial_bias_sigma", sim.initial_bias_sigma}};
  j["keyframes"] = {{"rate", sim.keyframe_rate}};
  std::vector<double> r_bc(9);
  for (int i = 0; i < 3; ++i)
    for (int jj = 0; jj < 3; ++jj) {
      r_bc[3 * i + jj] = sim.camera.body_from_camera.rotation.matrix()(i, jj);
    }
  j["camera"] = {{"focal", sim.camera.focal},
                 {"cx", sim.camera.principal_point(0)},
                 {"cy", sim.camera.principal_point(1)},
                 {"width", sim.image_width},
                 {"height", sim.image_height},
                 {"pixel_sigma", sim.pixel_sigma},
                 {"max_obs_per_frame", sim.max_obs_per_frame},
                 {"r_bc", r_bc},
                 {"p_bc", {sim.camera.body_from_camera.translation(0),
                           sim.camera.body_from_camera.translation(1),
                           sim.camera.body_from_camera.translation(2)}}};
  j["landmarks"] = {{"count", sim.landmarks.count},
                    {"room_half_extent", sim.landmarks.room_half_extent},
                    {"min_height", sim.landmarks.min_height},
                    {"max_height", sim.landmarks.max_height}};
  j["ground_truth"] = {{"discrete", sim.discrete_ground_truth}};
  j["gravity"] = {sim.gravity(0), sim.gravity(1), sim.gravity(2)};
  j["seed"] = sim.seed;
  j["estimator"] = {{"prior_rotation_sigma", est.prior_rotation_sigma},
                    {"prior_position_sigma", est.prior_position_sigma},
                    {"prior_velocity_sigma", est.prior_velocity_sigma},
                    {"prior_bias_sigma", est.prior_bias_sigma},
                    {"rel_tol", est.rel_tol},
                    {"max_iters", est.max_iters},
                    {"init_chunk", est.init_chunk},
                    {"chunk_iters", est.chunk_iters}};
  return j;
}

RunConfig load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config: invalid JSON in " + path.string() + ": " + e.what());
  }
  return parse_config(j);
}

}  // namespace pivio
