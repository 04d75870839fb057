#pragma once

#include "pivio/nav_state.hpp"
#include "pivio/pose.hpp"

#include <vector>

namespace pivio {

using Vec6d = Eigen::Matrix<double, 6, 1>;
using Mat6d = Eigen::Matrix<double, 6, 6>;

/// Body-frame pose estimation error at one keyframe:
/// [Log(R_est^T R_gt); R_est^T (p_est - p_gt)].
struct ErrorSample {
  double time = 0.0;
  Vec6d eps = Vec6d::Zero();
};

ErrorSample pose_error(double time, const NavStated& estimate, const NavStated& truth);

/// Mahalanobis square of the error under the estimator-reported covariance.
/// Throws std::domain_error when cov is singular.
double nees(const ErrorSample& err, const Mat6d& cov);

struct NeesSeries {
  int run_id = 0;
  std::vector<double> values;
};

struct AverageNeesResult {
  std::vector<double> mean;  // per time index, averaged over runs
  double lower = 0.0;        // acceptance bounds on the mean
  double upper = 0.0;
  std::vector<int> flags;    // -1 conservative, 0 accepted, +1 overconfident
  int overconfident_count = 0;
  int conservative_count = 0;
  bool accepted = false;     // no time step flags overconfident
};

/// Averages per-time NEES over runs and applies the two-sided chi-squared
/// acceptance test at significance alpha in each tail, with dof-per-sample
/// times run-count degrees of freedom.
AverageNeesResult average_nees(const std::vector<NeesSeries>& runs, int dof = 6,
                               double alpha = 0.025);

double chi_squared_quantile(double dof, double p);

/// KL divergence between zero-mean Gaussians:
/// 0.5 (tr(ref^-1 est) - n + ln det(ref)/det(est)). Throws std::domain_error
/// when the reference is singular.
double kl_gaussian(const Eigen::MatrixXd& cov_est, const Eigen::MatrixXd& cov_ref);

struct RmseResult {
  std::vector<double> rotation_deg;
  std::vector<double> position_m;
};

/// Per-time RMSE over aligned runs of error samples.
RmseResult rmse(const std::vector<std::vector<ErrorSample>>& runs);

struct TimedPose {
  double time = 0.0;
  Posed pose;
};

struct DriftBucket {
  double segment_length = 0.0;  // m requested
  int count = 0;                // segments evaluated
  double mean_translation_m = 0.0;
  double mean_rotation_deg = 0.0;
  bool skipped = false;  // trajectory shorter than the segment
};

/// Relative drift statistics: for each segment length, the end-of-segment
/// translation/rotation error after aligning the segment start frames.
std::vector<DriftBucket> relative_drift(const std::vector<TimedPose>& estimate,
                                        const std::vector<TimedPose>& truth,
                                        const std::vector<double>& segment_lengths);

}  // namespace pivio
