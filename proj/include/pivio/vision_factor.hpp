#pragma once

#include "pivio/camera.hpp"
#include "pivio/nav_state.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace pivio {

struct TrackObservation {
  int keyframe_id = -1;
  Eigen::Vector2d pixel = Eigen::Vector2d::Zero();  // px
  double pixel_sigma = 1.0;                         // px
};

/// All observations of one landmark across keyframes. Keyframe ids must be
/// distinct and sigmas positive.
struct LandmarkTrack {
  long landmark_id = -1;
  std::vector<TrackObservation> observations;

  bool usable() const { return observations.size() >= 2; }
};

/// A factor already reduced to whitened residual/Jacobian form. The local
/// cost model is |residual + jacobian * delta|^2 where delta stacks the
/// 15-dim tangent perturbations of the involved states, in order.
struct LinearizedFactor {
  std::vector<int> keyframes;
  Eigen::MatrixXd jacobian;
  Eigen::VectorXd residual;
};

// Triangulation is declared degenerate beyond this condition number.
inline constexpr double kTriangulationMaxCond = 1e8;

/// Linear (DLT-style) landmark estimate from the current pose linearization
/// points. Empty when fewer than two usable rays exist, the normal system is
/// ill-conditioned, or the point fails cheirality in every view.
inline std::optional<Vec3d> triangulate(const LandmarkTrack& track,
                                        const std::vector<NavStated>& states,
                                        const CameraModeld& cam) {
  cam.validate();
  if (track.observations.size() < 2) return std::nullopt;

  const int n = static_cast<int>(track.observations.size());
  Eigen::MatrixXd a(3 * n, 3);
  Eigen::VectorXd b(3 * n);
  for (int k = 0; k < n; ++k) {
    const TrackObservation& obs = track.observations[k];
    const NavStated& s = states.at(obs.keyframe_id);
    const Mat3d r_wc = s.rotation.matrix() * cam.body_from_camera.rotation.matrix();
    const Vec3d center = s.position + s.rotation * cam.body_from_camera.translation;
    Vec3d ray((obs.pixel(0) - cam.principal_point(0)) / cam.focal,
              (obs.pixel(1) - cam.principal_point(1)) / cam.focal, 1.0);
    const Mat3d cross = hat(ray) * r_wc.transpose();
    a.block<3, 3>(3 * k, 0) = cross;
    b.segment<3>(3 * k) = cross * center;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (!(sv(2) > 0.0) || sv(0) / sv(2) > kTriangulationMaxCond) return std::nullopt;
  const Vec3d point = svd.solve(b);

  bool in_front = false;
  for (const TrackObservation& obs : track.observations) {
    if (project(states.at(obs.keyframe_id), cam, point)) {
      in_front = true;
      break;
    }
  }
  if (!in_front) return std::nullopt;
  return point;
}

/// Triangulates and then refines the landmark to the reprojection optimum at
/// the given poses. With the landmark at its cost minimum the projected
/// factor below carries the exact gradient of the landmark-eliminated cost.
inline std::optional<Vec3d> solve_landmark(const LandmarkTrack& track,
                                           const std::vector<NavStated>& states,
                                           const CameraModeld& cam) {
  std::optional<Vec3d> point = triangulate(track, states, cam);
  if (!point) return std::nullopt;

  for (int iter = 0; iter < 10; ++iter) {
    Mat3d ete = Mat3d::Zero();
    Vec3d etr = Vec3d::Zero();
    int used = 0;
    for (const TrackObservation& obs : track.observations) {
      Eigen::Matrix<double, 2, 3> d_lm;
      auto predicted = project_with_jacobians<double>(states.at(obs.keyframe_id), cam,
                                                      *point, nullptr, &d_lm);
      if (!predicted) continue;
      const double w = 1.0 / (obs.pixel_sigma * obs.pixel_sigma);
      ete += w * d_lm.transpose() * d_lm;
      etr += w * d_lm.transpose() * (*predicted - obs.pixel);
      ++used;
    }
    if (used < 2) break;
    Eigen::LDLT<Mat3d> ldlt(ete);
    if (ldlt.info() != Eigen::Success) break;
    const Vec3d step = ldlt.solve(-etr);
    if (!step.allFinite()) break;
    *point += step;
    if (step.norm() < 1e-12) break;
  }
  return point;
}

/// Builds the structureless vision factor for one track: linearizes the
/// whitened reprojection residuals at the solved landmark, then projects the
/// pose Jacobian and residual onto the orthogonal complement of the landmark
/// Jacobian through a unitary basis from its SVD. The reduced factor has
/// 2n - 3 rows for n kept observations and involves only poses.
inline std::optional<LinearizedFactor> structureless_factor(
    const LandmarkTrack& track, const std::vector<NavStated>& states,
    const CameraModeld& cam) {
  std::optional<Vec3d> point = solve_landmark(track, states, cam);
  if (!point) return std::nullopt;

  struct Row {
    int keyframe_id;
    Eigen::Matrix<double, 2, 6> d_pose;
    Eigen::Matrix<double, 2, 3> d_landmark;
    Eigen::Vector2d residual;
  };
  std::vector<Row> rows;
  rows.reserve(track.observations.size());
  for (const TrackObservation& obs : track.observations) {
    if (!(obs.pixel_sigma > 0.0)) {
      throw std::invalid_argument("structureless_factor: pixel_sigma must be positive");
    }
    Row row;
    Eigen::Matrix<double, 2, 6> d_pose;
    Eigen::Matrix<double, 2, 3> d_lm;
    auto predicted =
        project_with_jacobians(states.at(obs.keyframe_id), cam, *point, &d_pose, &d_lm);
    if (!predicted) continue;  // behind this view at the linearization point
    const double w = 1.0 / obs.pixel_sigma;
    row.keyframe_id = obs.keyframe_id;
    row.d_pose = w * d_pose;
    row.d_landmark = w * d_lm;
    row.residual = w * (*predicted - obs.pixel);
    rows.push_back(row);
  }
  const int n = static_cast<int>(rows.size());
  if (n < 2) return std::nullopt;

  LinearizedFactor out;
  for (const Row& row : rows) {
    bool known = false;
    for (int kf : out.keyframes) known = known || (kf == row.keyframe_id);
    if (!known) out.keyframes.push_back(row.keyframe_id);
  }

  Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2 * n, kStateDim * out.keyframes.size());
  Eigen::MatrixXd e(2 * n, 3);
  Eigen::VectorXd r0(2 * n);
  for (int k = 0; k < n; ++k) {
    int slot = 0;
    while (out.keyframes[slot] != rows[k].keyframe_id) ++slot;
    f.block<2, 6>(2 * k, kStateDim * slot) = rows[k].d_pose;
    e.block<2, 3>(2 * k, 0) = rows[k].d_landmark;
    r0.segment<2>(2 * k) = rows[k].residual;
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(e, Eigen::ComputeFullU);
  const auto& sv = svd.singularValues();
  if (!(sv(2) > 1e-8 * sv(0))) return std::nullopt;  // rank-deficient landmark block
  const Eigen::MatrixXd basis = svd.matrixU().rightCols(2 * n - 3);

  out.jacobian = basis.transpose() * f;
  out.residual = basis.transpose() * r0;
  return out;
}

}  // namespace pivio
