#pragma once

#include "pivio/config.hpp"
#include "pivio/gauss_newton.hpp"
#include "pivio/metrics.hpp"
#include "pivio/simulator.hpp"

#include <string>
#include <vector>

namespace pivio {

struct EstimationResult {
  std::vector<NavStated> states;
  SolveReport report;
  FactorGraph graph;  // graph actually solved (after bias re-preintegration)
};

/// Assembles the smoothing problem for a dataset: preintegration of every
/// keyframe interval at the zero-bias linearization point, the prior on the
/// first state, and the landmark tracks.
FactorGraph build_graph(const SimDataset& data, const EstimatorConfig& est);

/// Full batch estimate: IMU-predicted initialization warmed up in growing
/// chunks, intervals re-preintegrated at the smoothed biases when the
/// first-order correction range is exceeded, then Gauss-Newton to tolerance.
EstimationResult run_estimation(const SimDataset& data, const EstimatorConfig& est);

/// One Monte-Carlo run reduced to its evaluation artifacts.
struct RunOutcome {
  int run_id = 0;
  bool ok = false;
  std::string error;
  std::vector<double> times;
  std::vector<ErrorSample> errors;   // body-frame pose errors per keyframe
  NeesSeries nees_series;            // pose NEES per keyframe
  std::vector<Vec6d> bias_errors;    // [bg - bg_gt; ba - ba_gt] per keyframe
  std::vector<Vec6d> bias_sigmas;    // marginal standard deviations per keyframe
  bool final_bias_within_3sigma = false;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;
  int skipped_tracks = 0;
};

RunOutcome evaluate_run(const SimDataset& data, const EstimatorConfig& est, int run_id = 0);

/// Independent simulate+estimate runs with seeds base.seed + run index,
/// fanned out over worker threads. Outcomes are ordered by run id regardless
/// of scheduling; failures are recorded, not thrown.
std::vector<RunOutcome> monte_carlo(const SimConfig& base, const EstimatorConfig& est,
                                    int runs, int jobs);

}  // namespace pivio
