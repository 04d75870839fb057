#include "pivio/pipeline.hpp"

#include <atomic>
#include <thread>

namespace pivio {

namespace {

Mat15d prior_covariance(const EstimatorConfig& est) {
  Mat15d cov = Mat15d::Identity();
  cov.block<3, 3>(kIdxRot, kIdxRot) *= est.prior_rotation_sigma * est.prior_rotation_sigma;
  cov.block<3, 3>(kIdxPos, kIdxPos) *= est.prior_position_sigma * est.prior_position_sigma;
  cov.block<3, 3>(kIdxVel, kIdxVel) *= est.prior_velocity_sigma * est.prior_velocity_sigma;
  cov.block<3, 3>(kIdxBg, kIdxBg) *= est.prior_bias_sigma * est.prior_bias_sigma;
  cov.block<3, 3>(kIdxBa, kIdxBa) *= est.prior_bias_sigma * est.prior_bias_sigma;
  return cov;
}

PreintegratedImud preintegrate_interval(const SimDataset& data, int interval,
                                        const ImuBiasd& bias_lin) {
  const int per = data.config.samples_per_interval();
  PreintegratedImud pre(bias_lin);
  const int begin = interval * per;
  const int end = std::min<int>(begin + per, static_cast<int>(data.imu.size()));
  for (int k = begin; k < end; ++k) {
    pre.integrate(data.imu[k], data.imu_dt[k], data.config.noise);
  }
  return pre;
}

/// predict() with the increments first-order corrected to the start bias.
NavStated predict_corrected(const NavStated& x, const PreintegratedImud& pre,
                            const Vec3d& gravity) {
  const PreintegratedDelta<double> corr = bias_corrected_delta(pre, x.bias);
  const double dt = pre.dt_total();
  NavStated out;
  out.rotation = x.rotation * corr.rotation;
  out.velocity = x.velocity + gravity * dt + x.rotation * corr.velocity;
  out.position = x.position + x.velocity * dt + 0.5 * gravity * dt * dt +
                 x.rotation * corr.position;
  out.bias = x.bias;
  return out;
}

FactorGraph prefix_graph(const FactorGraph& full, int num_states) {
  FactorGraph out;
  out.prior = full.prior;
  out.gravity = full.gravity;
  out.noise = full.noise;
  out.camera = full.camera;
  for (const ImuChainFactor& f : full.imu_factors) {
    if (f.j < num_states) out.imu_factors.push_back(f);
  }
  for (const LandmarkTrack& t : full.tracks) {
    LandmarkTrack cut;
    cut.landmark_id = t.landmark_id;
    for (const TrackObservation& o : t.observations) {
      if (o.keyframe_id < num_states) cut.observations.push_back(o);
    }
    if (!cut.observations.empty()) out.tracks.push_back(std::move(cut));
  }
  return out;
}

}  // namespace

FactorGraph build_graph(const SimDataset& data, const EstimatorConfig& est) {
  FactorGraph graph;
  graph.gravity = data.config.gravity;
  graph.noise = data.config.noise;
  graph.camera = data.config.camera;
  graph.tracks = data.tracks;

  PriorFactor prior;
  prior.mean = data.ground_truth.at(0);
  prior.mean.bias = ImuBiasd{};  // zero-mean prior over the sampled bias
  prior.covariance = prior_covariance(est);
  graph.prior = prior;

  const int intervals = static_cast<int>(data.ground_truth.size()) - 1;
  graph.imu_factors.reserve(intervals);
  for (int i = 0; i < intervals; ++i) {
    ImuChainFactor f;
    f.i = i;
    f.j = i + 1;
    f.pre = preintegrate_interval(data, i, ImuBiasd{});
    graph.imu_factors.push_back(std::move(f));
  }
  return graph;
}

EstimationResult run_estimation(const SimDataset& data, const EstimatorConfig& est) {
  EstimationResult result;
  result.graph = build_graph(data, est);
  FactorGraph& graph = result.graph;
  const int total = static_cast<int>(data.ground_truth.size());

  GaussNewtonOptions warm;
  warm.max_iters = est.chunk_iters;
  warm.rel_tol = est.rel_tol;
  GaussNewtonOptions final_opts;
  final_opts.max_iters = est.max_iters;
  final_opts.rel_tol = est.rel_tol;

  // Grow the state vector by IMU prediction, solving every chunk so the
  // linearization points stay near the basin.
  std::vector<NavStated>& states = result.states;
  states.push_back(graph.prior->mean);
  for (int k = 1; k < total; ++k) {
    states.push_back(predict_corrected(states.back(), graph.imu_factors[k - 1].pre,
                                       graph.gravity));
    const bool chunk_edge = (k % est.init_chunk == 0);
    if (chunk_edge && k + 1 < total) {
      FactorGraph prefix = prefix_graph(graph, k + 1);
      gauss_newton(prefix, &states, warm);
    }
  }
  if (total > 1) gauss_newton(graph, &states, warm);

  // The increments were integrated at zero bias; once the smoothed biases are
  // known, re-integrate intervals whose correction leaves the first-order
  // range.
  bool reintegrated = false;
  for (ImuChainFactor& f : graph.imu_factors) {
    const ImuBiasd& b = states[f.i].bias;
    const double shift = std::max((b.gyro - f.pre.bias_lin().gyro).norm(),
                                  (b.accel - f.pre.bias_lin().accel).norm());
    if (shift > 0.02) {
      f.pre = preintegrate_interval(data, f.i, b);
      reintegrated = true;
    }
  }
  (void)reintegrated;

  result.report = gauss_newton(graph, &states, final_opts);
  return result;
}

RunOutcome evaluate_run(const SimDataset& data, const EstimatorConfig& est, int run_id) {
  RunOutcome out;
  out.run_id = run_id;
  try {
    EstimationResult result = run_estimation(data, est);
    const std::vector<Mat15d> marginals = all_marginal_covariances(result.graph, result.states);

    const size_t n = result.states.size();
    out.times = data.keyframe_times;
    out.errors.reserve(n);
    out.nees_series.run_id = run_id;
    out.nees_series.values.reserve(n);
    out.bias_errors.reserve(n);
    out.bias_sigmas.reserve(n);
    for (size_t k = 0; k < n; ++k) {
      const ErrorSample err = pose_error(data.keyframe_times[k], result.states[k],
                                         data.ground_truth[k]);
      out.errors.push_back(err);
      out.nees_series.values.push_back(nees(err, marginals[k].topLeftCorner<6, 6>()));
      Vec6d be, bs;
      be.head<3>() = result.states[k].bias.gyro - data.ground_truth[k].bias.gyro;
      be.tail<3>() = result.states[k].bias.accel - data.ground_truth[k].bias.accel;
      bs.head<3>() = marginals[k].block<3, 3>(kIdxBg, kIdxBg).diagonal().cwiseSqrt();
      bs.tail<3>() = marginals[k].block<3, 3>(kIdxBa, kIdxBa).diagonal().cwiseSqrt();
      out.bias_errors.push_back(be);
      out.bias_sigmas.push_back(bs);
    }
    out.final_bias_within_3sigma =
        (out.bias_errors.back().cwiseAbs().array() <= 3.0 * out.bias_sigmas.back().array())
            .all();
    out.final_cost = result.report.final_cost;
    out.iterations = result.report.iterations;
    out.converged = result.report.converged;
    out.skipped_tracks = result.report.skipped_tracks;
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

std::vector<RunOutcome> monte_carlo(const SimConfig& base, const EstimatorConfig& est,
                                    int runs, int jobs) {
  if (runs < 1) throw std::invalid_argument("monte_carlo: need at least one run");
  std::vector<RunOutcome> outcomes(runs);
  std::atomic<int> next{0};
  auto worker = [&]() {
    while (true) {
      const int idx = next.fetch_add(1);
      if (idx >= runs) break;
      SimConfig config = base;
      config.seed = base.seed + static_cast<uint64_t>(idx);
      try {
        SimDataset data = make_dataset(config);
        outcomes[idx] = evaluate_run(data, est, idx);
      } catch (const std::exception& e) {
        outcomes[idx].run_id = idx;
        outcomes[idx].ok = false;
        outcomes[idx].error = e.what();
      }
    }
  };
  const int workers = std::max(1, std::min(jobs, runs));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  return outcomes;
}

}  // namespace pivio
