#pragma once

#include "pivio/factor_graph.hpp"

#include <stdexcept>
#include <vector>

namespace pivio {

struct GaussNewtonOptions {
  int max_iters = 50;
  double rel_tol = 1e-8;
  double cost_floor = 1e-18;  // below this the problem counts as solved exactly
  // Levenberg-style diagonal damping engaged only when a plain step fails to
  // decrease the cost.
  double lambda_init = 1e-4;
  double lambda_scale = 10.0;
  double lambda_max = 1e4;
};

struct SolveReport {
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::vector<double> iteration_costs;  // accepted costs, starting at the initial one
  bool converged = false;
  int skipped_tracks = 0;  // degenerate vision factors at the final linearization
  Mat15d last_state_marginal = Mat15d::Zero();
};

/// Thrown when the normal-equation matrix is rank deficient (missing prior or
/// unconstrained states). Reports how many null directions were found.
class SingularHessianError : public std::runtime_error {
 public:
  explicit SingularHessianError(int null_directions);
  int null_directions() const { return null_directions_; }

 private:
  int null_directions_;
};

/// On-manifold batch Gauss-Newton: repeatedly linearize all factors through
/// the state retractions, solve the sparse normal equations, retract. States
/// are updated in place.
SolveReport gauss_newton(const FactorGraph& graph, std::vector<NavStated>* states,
                         const GaussNewtonOptions& options = {});

/// 15x15 covariance block of one keyframe, from the inverse of the normal
/// matrix linearized at the given states.
Mat15d marginal_covariance(const FactorGraph& graph, const std::vector<NavStated>& states,
                           int keyframe);

/// Covariance blocks of every keyframe from a single factorization.
std::vector<Mat15d> all_marginal_covariances(const FactorGraph& graph,
                                             const std::vector<NavStated>& states);

}  // namespace pivio
