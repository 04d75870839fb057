#include "pivio/metrics.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <stdexcept>

namespace pivio {

ErrorSample pose_error(double time, const NavStated& estimate, const NavStated& truth) {
  ErrorSample out;
  out.time = time;
  out.eps.head<3>() =
      log_so3(Rotationd::from_matrix_unchecked(estimate.rotation.matrix().transpose() *
                                               truth.rotation.matrix()));
  out.eps.tail<3>() = estimate.rotation.inverse() * (estimate.position - truth.position);
  return out;
}

double nees(const ErrorSample& err, const Mat6d& cov) {
  Eigen::LDLT<Mat6d> ldlt(cov);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0) {
    throw std::domain_error("nees: covariance is singular");
  }
  return err.eps.dot(ldlt.solve(err.eps));
}

double chi_squared_quantile(double dof, double p) {
  return boost::math::quantile(boost::math::chi_squared(dof), p);
}

AverageNeesResult average_nees(const std::vector<NeesSeries>& runs, int dof,
                               double alpha) {
  if (runs.empty()) throw std::invalid_argument("average_nees: no runs");
  std::vector<const NeesSeries*> ordered;
  ordered.reserve(runs.size());
  for (const NeesSeries& r : runs) ordered.push_back(&r);
  std::sort(ordered.begin(), ordered.end(),
            [](const NeesSeries* a, const NeesSeries* b) { return a->run_id < b->run_id; });

  const size_t len = ordered.front()->values.size();
  for (const NeesSeries* r : ordered) {
    if (r->values.size() != len) {
      throw std::invalid_argument("average_nees: runs have mismatched lengths");
    }
  }

  const double n = static_cast<double>(runs.size());
  AverageNeesResult out;
  out.lower = chi_squared_quantile(dof * n, alpha) / n;
  out.upper = chi_squared_quantile(dof * n, 1.0 - alpha) / n;
  out.mean.resize(len, 0.0);
  out.flags.resize(len, 0);
  for (size_t k = 0; k < len; ++k) {
    double sum = 0.0;
    for (const NeesSeries* r : ordered) sum += r->values[k];
    out.mean[k] = sum / n;
    if (out.mean[k] > out.upper) {
      out.flags[k] = 1;
      ++out.overconfident_count;
    } else if (out.mean[k] < out.lower) {
      out.flags[k] = -1;
      ++out.conservative_count;
    }
  }
  out.accepted = (out.overconfident_count == 0);
  return out;
}

double kl_gaussian(const Eigen::MatrixXd& cov_est, const Eigen::MatrixXd& cov_ref) {
  if (cov_est.rows() != cov_ref.rows() || cov_est.cols() != cov_ref.cols() ||
      cov_est.rows() != cov_est.cols()) {
    throw std::invalid_argument("kl_gaussian: dimension mismatch");
  }
  const int n = static_cast<int>(cov_ref.rows());
  Eigen::LDLT<Eigen::MatrixXd> ref(cov_ref);
  if (ref.info() != Eigen::Success || !ref.isPositive() ||
      ref.vectorD().minCoeff() <= 0.0) {
    throw std::domain_error("kl_gaussian: reference covariance is singular");
  }
  const double trace_term = ref.solve(cov_est).trace();
  double logdet_ref = 0.0;
  for (int i = 0; i < n; ++i) logdet_ref += std::log(ref.vectorD()(i));
  Eigen::LDLT<Eigen::MatrixXd> est(cov_est);
  double logdet_est = 0.0;
  for (int i = 0; i < n; ++i) logdet_est += std::log(est.vectorD()(i));
  return 0.5 * (trace_term - n + logdet_ref - logdet_est);
}

RmseResult rmse(const std::vector<std::vector<ErrorSample>>& runs) {
  RmseResult out;
  if (runs.empty()) return out;
  const size_t len = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != len) throw std::invalid_argument("rmse: runs have mismatched lengths");
  }
  out.rotation_deg.resize(len, 0.0);
  out.position_m.resize(len, 0.0);
  for (size_t k = 0; k < len; ++k) {
    double rot2 = 0.0, pos2 = 0.0;
    for (const auto& r : runs) {
      rot2 += r[k].eps.head<3>().squaredNorm();
      pos2 += r[k].eps.tail<3>().squaredNorm();
    }
    out.rotation_deg[k] = std::sqrt(rot2 / runs.size()) * 180.0 / M_PI;
    out.position_m[k] = std::sqrt(pos2 / runs.size());
  }
  return out;
}

std::vector<DriftBucket> relative_drift(const std::vector<TimedPose>& estimate,
                                        const std::vector<TimedPose>& truth,
                                        const std::vector<double>& segment_lengths) {
  if (estimate.size() != truth.size()) {
    throw std::invalid_argument("relative_drift: trajectories are not aligned");
  }
  const size_t n = truth.size();
  std::vector<double> arc(n, 0.0);
  for (size_t i = 1; i < n; ++i) {
    arc[i] = arc[i - 1] + (truth[i].pose.translation - truth[i - 1].pose.translation).norm();
  }

  std::vector<DriftBucket> out;
  for (double length : segment_lengths) {
    DriftBucket bucket;
    bucket.segment_length = length;
    if (n < 2 || arc.back() < length) {
      bucket.skipped = true;
      out.push_back(bucket);
      continue;
    }
    double trans_sum = 0.0, rot_sum = 0.0;
    size_t e = 0;
    for (size_t s = 0; s < n; ++s) {
      if (e < s) e = s;
      while (e < n && arc[e] - arc[s] < length) ++e;
      if (e >= n) break;
      const Posed& gs = truth[s].pose;
      const Posed& ge = truth[e].pose;
      const Posed& hs = estimate[s].pose;
      const Posed& he = estimate[e].pose;
      const Vec3d rel_gt = gs.rotation.inverse() * (ge.translation - gs.translation);
      const Vec3d rel_est = hs.rotation.inverse() * (he.translation - hs.translation);
      trans_sum += (rel_est - rel_gt).norm();
      const Rotationd rot_gt = gs.rotation.inverse() * ge.rotation;
      const Rotationd rot_est = hs.rotation.inverse() * he.rotation;
      rot_sum += log_so3(Rotationd(rot_gt.inverse() * rot_est)).norm() * 180.0 / M_PI;
      ++bucket.count;
    }
    if (bucket.count > 0) {
      bucket.mean_translation_m = trans_sum / bucket.count;
      bucket.mean_rotation_deg = rot_sum / bucket.count;
    }
    out.push_back(bucket);
  }
  return out;
}

}  // namespace pivio
