#pragma once

#include <Eigen/Core>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace pivio {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;

// Below this angle the closed forms divide by ~0; switch to 2nd-order Taylor
// coefficients.
inline constexpr double kSmallAngle = 1e-5;

/// Skew-symmetric matrix of v, so that hat(v) * w == v.cross(w).
template <typename Derived>
Mat3<typename Derived::Scalar> hat(const Eigen::MatrixBase<Derived>& v) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using S = typename Derived::Scalar;
  Mat3<S> m;
  m << S(0), -v(2), v(1),
       v(2), S(0), -v(0),
      -v(1), v(0), S(0);
  return m;
}

/// Inverse of hat. Throws std::invalid_argument if the input is not
/// antisymmetric within tol (Frobenius norm of S + S^T).
template <typename Derived>
Vec3<typename Derived::Scalar> vee(const Eigen::MatrixBase<Derived>& s,
                                   double tol = 1e-9) {
  EIGEN_STATIC_ASSERT_MATRIX_SPECIFIC_SIZE(Derived, 3, 3);
  using S = typename Derived::Scalar;
  Mat3<S> m = s;
  if (!m.allFinite() || (m + m.transpose()).norm() > S(tol)) {
    throw std::invalid_argument("vee: input matrix is not antisymmetric");
  }
  return Vec3<S>(m(2, 1), m(0, 2), m(1, 0));
}

/// Projects a near-orthonormal matrix back onto SO(3) (polar projection).
/// Throws std::invalid_argument if the input is too far from a rotation
/// (non-finite, reflecting, or strongly rank-deficient).
template <typename Scalar>
Mat3<Scalar> project_to_so3(const Mat3<Scalar>& m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("project_to_so3: non-finite matrix");
  }
  Eigen::JacobiSVD<Mat3<Scalar>> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3<Scalar>& sv = svd.singularValues();
  if (sv(0) > Scalar(2) || sv(2) < Scalar(0.5)) {
    throw std::invalid_argument("project_to_so3: matrix is not close to a rotation");
  }
  Mat3<Scalar> r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < Scalar(0)) {
    throw std::invalid_argument("project_to_so3: matrix has negative determinant");
  }
  return r;
}

/// A 3x3 rotation matrix with its orthonormality invariant maintained.
///
/// Construction from a raw matrix re-orthonormalizes (polar projection) when
/// the orthogonality residual exceeds 1e-9, and rejects matrices that are not
/// recognizably rotations. Values are immutable once built.
template <typename Scalar>
class Rotation {
 public:
  Rotation() : m_(Mat3<Scalar>::Identity()) {}

  explicit Rotation(const Mat3<Scalar>& m) : m_(m) {
    const Scalar ortho = (m_.transpose() * m_ - Mat3<Scalar>::Identity()).norm();
    if (!(ortho <= Scalar(1e-9)) || std::abs(m_.determinant() - Scalar(1)) > Scalar(1e-9)) {
      m_ = project_to_so3(m);
    }
  }

  /// Wraps a matrix known to be orthonormal by construction.
  static Rotation from_matrix_unchecked(const Mat3<Scalar>& m) {
    Rotation r;
    r.m_ = m;
    return r;
  }

  const Mat3<Scalar>& matrix() const { return m_; }

  Rotation inverse() const { return from_matrix_unchecked(m_.transpose()); }

  Rotation operator*(const Rotation& rhs) const {
    return from_matrix_unchecked(m_ * rhs.m_);
  }

  Vec3<Scalar> operator*(const Vec3<Scalar>& v) const { return m_ * v; }

 private:
  Mat3<Scalar> m_;
};

using Rotationd = Rotation<double>;

/// Exponential map of SO(3), Rodrigues form with a Taylor fallback for
/// small angles.
template <typename Derived>
Rotation<typename Derived::Scalar> exp_so3(const Eigen::MatrixBase<Derived>& phi) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using S = typename Derived::Scalar;
  const Vec3<S> p = phi;
  const S theta2 = p.squaredNorm();
  const S theta = std::sqrt(theta2);
  const Mat3<S> w = hat(p);
  S a, b;  // R = I + a*w + b*w^2
  if (theta < S(kSmallAngle)) {
    a = S(1) - theta2 / S(6);
    b = S(0.5) - theta2 / S(24);
  } else {
    a = std::sin(theta) / theta;
    b = (S(1) - std::cos(theta)) / theta2;
  }
  return Rotation<S>::from_matrix_unchecked(Mat3<S>::Identity() + a * w + b * w * w);
}

/// Logarithm map of SO(3). Returns the rotation vector with norm in [0, pi].
///
/// The (R - R^T) form degenerates as the angle approaches pi; there the axis
/// is recovered from the dominant diagonal of the symmetric part instead.
template <typename Scalar>
Vec3<Scalar> log_so3(const Rotation<Scalar>& rot) {
  const Mat3<Scalar>& r = rot.matrix();
  const Scalar cos_theta =
      std::clamp((r.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  const Scalar theta = std::acos(cos_theta);

  if (theta < Scalar(kSmallAngle)) {
    // theta/(2 sin theta) ~ 1/2 + theta^2/12
    const Vec3<Scalar> v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    return (Scalar(0.5) + theta * theta / Scalar(12)) * v;
  }

  if (theta > Scalar(M_PI) - Scalar(1e-4)) {
    // Near pi: a a^T = ((R + R^T)/2 - cos(theta) I) / (1 - cos(theta)), and the
    // angle is recovered from the antisymmetric part, where acos of the trace
    // is ill-conditioned.
    const Mat3<Scalar> outer =
        ((r + r.transpose()) / Scalar(2) - cos_theta * Mat3<Scalar>::Identity()) /
        (Scalar(1) - cos_theta);
    int k;
    outer.diagonal().maxCoeff(&k);
    Vec3<Scalar> axis = outer.col(k) / std::sqrt(outer(k, k));
    axis.normalize();
    const Vec3<Scalar> v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
    const Scalar sin_theta = std::clamp(v.norm() / Scalar(2), Scalar(0), Scalar(1));
    const Scalar theta_pi = Scalar(M_PI) - std::asin(sin_theta);
    // The antisymmetric part still carries the sign while sin(theta) > 0.
    if (axis.dot(v) < Scalar(0)) axis = -axis;
    return theta_pi * axis;
  }

  const Vec3<Scalar> v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  return (theta / (Scalar(2) * std::sin(theta))) * v;
}

/// Right Jacobian of SO(3): Exp(phi + d) ~ Exp(phi) Exp(right_jacobian(phi) d).
template <typename Derived>
Mat3<typename Derived::Scalar> right_jacobian(const Eigen::MatrixBase<Derived>& phi) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using S = typename Derived::Scalar;
  const Vec3<S> p = phi;
  const S theta2 = p.squaredNorm();
  const S theta = std::sqrt(theta2);
  const Mat3<S> w = hat(p);
  S a, b;  // J = I - a*w + b*w^2
  if (theta < S(kSmallAngle)) {
    a = S(0.5) - theta2 / S(24);
    b = S(1) / S(6) - theta2 / S(120);
  } else {
    a = (S(1) - std::cos(theta)) / theta2;
    b = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3<S>::Identity() - a * w + b * w * w;
}

/// Inverse of the right Jacobian: Log(Exp(phi) Exp(d)) ~ phi +
/// right_jacobian_inv(phi) d. Requires |phi| < pi; throws std::domain_error
/// at or beyond the cut locus.
template <typename Derived>
Mat3<typename Derived::Scalar> right_jacobian_inv(const Eigen::MatrixBase<Derived>& phi) {
  EIGEN_STATIC_ASSERT_VECTOR_SPECIFIC_SIZE(Derived, 3);
  using S = typename Derived::Scalar;
  const Vec3<S> p = phi;
  const S theta2 = p.squaredNorm();
  const S theta = std::sqrt(theta2);
  if (theta >= S(M_PI) - S(1e-9)) {
    throw std::domain_error("right_jacobian_inv: |phi| must be below pi");
  }
  const Mat3<S> w = hat(p);
  S c;  // J^-1 = I + w/2 + c*w^2
  if (theta < S(kSmallAngle)) {
    c = S(1) / S(12) + theta2 / S(720);
  } else {
    c = S(1) / theta2 - (S(1) + std::cos(theta)) / (S(2) * theta * std::sin(theta));
  }
  return Mat3<S>::Identity() + S(0.5) * w + c * w * w;
}

}  // namespace pivio
