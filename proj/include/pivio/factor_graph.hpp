#pragma once

#include "pivio/camera.hpp"
#include "pivio/imu_factor.hpp"
#include "pivio/nav_state.hpp"
#include "pivio/preintegration.hpp"
#include "pivio/vision_factor.hpp"

#include <optional>
#include <stdexcept>
#include <vector>

namespace pivio {

using Mat15d = Eigen::Matrix<double, kStateDim, kStateDim>;
using Vec15d = Eigen::Matrix<double, kStateDim, 1>;

/// Gaussian prior on one state: mean and 15x15 covariance in the tangent
/// ordering [dphi, dp, dv, dbg, dba].
struct PriorFactor {
  NavStated mean;
  Mat15d covariance = Mat15d::Identity();
};

/// Preintegrated-IMU constraint between consecutive keyframes i and j = i+1.
/// A bias random-walk factor over the same interval is implied.
struct ImuChainFactor {
  int i = 0;
  int j = 1;
  PreintegratedImud pre;
};

/// The full smoothing problem over an ordered set of keyframe states.
struct FactorGraph {
  std::vector<NavStated> states;  // initial estimates, one per keyframe
  std::optional<PriorFactor> prior;  // on state 0; fixes the gauge
  std::vector<ImuChainFactor> imu_factors;
  std::vector<LandmarkTrack> tracks;
  Vec3d gravity = Vec3d(0, 0, -9.81);
  ImuNoiseModeld noise;  // bias random-walk densities
  CameraModeld camera;

  void validate(size_t num_states) const {
    const int n = static_cast<int>(num_states);
    for (const ImuChainFactor& f : imu_factors) {
      if (f.j != f.i + 1 || f.i < 0 || f.j >= n) {
        throw std::invalid_argument("FactorGraph: IMU factors must chain consecutive keyframes");
      }
    }
    for (const LandmarkTrack& t : tracks) {
      for (const TrackObservation& o : t.observations) {
        if (o.keyframe_id < 0 || o.keyframe_id >= n) {
          throw std::invalid_argument("FactorGraph: track references unknown keyframe");
        }
      }
    }
  }
};

/// Whitened linearization of the prior factor at the given state.
inline LinearizedFactor linearize_prior(const PriorFactor& prior, const NavStated& state,
                                        int keyframe = 0) {
  Vec15d r = local(prior.mean, state);
  Mat15d j = Mat15d::Identity();
  j.block<3, 3>(kIdxRot, kIdxRot) = right_jacobian_inv(Vec3d(r.segment<3>(kIdxRot)));
  j.block<3, 3>(kIdxPos, kIdxPos) =
      prior.mean.rotation.matrix().transpose() * state.rotation.matrix();
  const Mat15d w = whitener<kStateDim>(prior.covariance);
  LinearizedFactor out;
  out.keyframes = {keyframe};
  out.jacobian = w * j;
  out.residual = w * r;
  return out;
}

/// Whitened linearization of one preintegrated-IMU factor.
inline LinearizedFactor linearize_imu_factor(const ImuChainFactor& f,
                                             const std::vector<NavStated>& states,
                                             const Vec3d& gravity) {
  const NavStated& xi = states.at(f.i);
  const NavStated& xj = states.at(f.j);
  const Vec9d r = imu_residual(xi, xj, f.pre, gravity);
  const ImuFactorJacobians jac = imu_residual_jacobians(xi, xj, f.pre, gravity);
  const Mat9d w = whitener<9>(f.pre.cov());
  LinearizedFactor out;
  out.keyframes = {f.i, f.j};
  out.jacobian.resize(9, 2 * kStateDim);
  out.jacobian.leftCols<kStateDim>() = w * jac.d_state_i;
  out.jacobian.rightCols<kStateDim>() = w * jac.d_state_j;
  out.residual = w * r;
  return out;
}

/// Whitened linearization of the bias random-walk factor between i and j.
inline LinearizedFactor linearize_bias_factor(const ImuChainFactor& f,
                                              const std::vector<NavStated>& states,
                                              const ImuNoiseModeld& noise) {
  const Eigen::Matrix<double, 6, 6> w =
      whitener<6>(bias_random_walk_cov(noise, f.pre.dt_total()));
  LinearizedFactor out;
  out.keyframes = {f.i, f.j};
  out.jacobian = Eigen::MatrixXd::Zero(6, 2 * kStateDim);
  out.jacobian.block<3, 3>(0, kIdxBg) = -w.topLeftCorner<3, 3>();
  out.jacobian.block<3, 3>(3, kIdxBa) = -w.bottomRightCorner<3, 3>();
  out.jacobian.block<3, 3>(0, kStateDim + kIdxBg) = w.topLeftCorner<3, 3>();
  out.jacobian.block<3, 3>(3, kStateDim + kIdxBa) = w.bottomRightCorner<3, 3>();
  out.residual = w * bias_residual(states.at(f.i), states.at(f.j));
  return out;
}

struct Linearization {
  std::vector<LinearizedFactor> factors;
  int skipped_tracks = 0;
};

/// Linearizes every factor at the given states. Degenerate vision tracks are
/// skipped and counted; tracks with fewer than two observations count as
/// skipped as well.
inline Linearization linearize_graph(const FactorGraph& graph,
                                     const std::vector<NavStated>& states) {
  Linearization out;
  out.factors.reserve(1 + 2 * graph.imu_factors.size() + graph.tracks.size());
  if (graph.prior) {
    out.factors.push_back(linearize_prior(*graph.prior, states.at(0)));
  }
  for (const ImuChainFactor& f : graph.imu_factors) {
    out.factors.push_back(linearize_imu_factor(f, states, graph.gravity));
    out.factors.push_back(linearize_bias_factor(f, states, graph.noise));
  }
  for (const LandmarkTrack& t : graph.tracks) {
    std::optional<LinearizedFactor> f = structureless_factor(t, states, graph.camera);
    if (f) {
      out.factors.push_back(std::move(*f));
    } else {
      ++out.skipped_tracks;
    }
  }
  return out;
}

struct CostBreakdown {
  double total = 0.0;
  int skipped_tracks = 0;
};

/// Sum of squared whitened residuals over all factors; vision enters through
/// the null-space-projected residual at the current linearization.
inline CostBreakdown total_cost(const FactorGraph& graph,
                                const std::vector<NavStated>& states) {
  Linearization lin = linearize_graph(graph, states);
  CostBreakdown out;
  out.skipped_tracks = lin.skipped_tracks;
  for (const LinearizedFactor& f : lin.factors) out.total += f.residual.squaredNorm();
  return out;
}

}  // namespace pivio
