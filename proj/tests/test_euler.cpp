#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <pivio/euler.hpp>

#include <random>

using namespace pivio;

namespace {
std::mt19937_64 rng(88);

Vec3d random_axis() {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vec3d a(u(rng), u(rng), u(rng));
  while (a.norm() < 1e-3) a = Vec3d(u(rng), u(rng), u(rng));
  return a.normalized();
}

// Final-orientation error of Euler-angle integration of a constant rate over
// total time T with step dt.
double euler_final_error(const Vec3d& omega, double total, double dt) {
  Vec3d theta = Vec3d::Zero();
  int steps = static_cast<int>(std::round(total / dt));
  for (int k = 0; k < steps; ++k) theta = euler_integrate(theta, omega, dt);
  Rotationd from_euler(euler_to_rotation(theta));
  Rotationd exact = exp_so3(Vec3d(omega * total));
  return log_so3(Rotationd(exact.inverse() * from_euler)).norm();
}
}  // namespace

TEST_CASE("rate matrix fundamentals") {
  CHECK((euler_rate_matrix(Vec3d::Zero()) - Mat3d::Identity()).norm() == 0.0);
  CHECK((euler_rate_matrix_inv(Vec3d::Zero()) - Mat3d::Identity()).norm() == 0.0);

  // body omega from an Euler rate matches the rotation-matrix derivative.
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vec3d theta(u(rng), 1.2 * u(rng), 3.0 * u(rng));
    Vec3d theta_dot(u(rng), u(rng), u(rng));
    const double dt = 1e-7;
    Mat3d r0 = euler_to_rotation(Vec3d(theta - 0.5 * dt * theta_dot));
    Mat3d r1 = euler_to_rotation(Vec3d(theta + 0.5 * dt * theta_dot));
    Mat3d dr = (r1 - r0) / dt;
    Vec3d omega_fd = vee(Mat3d(euler_to_rotation(theta).transpose() * dr), 1e-4);
    CHECK((euler_rate_matrix(theta) * theta_dot - omega_fd).norm() < 1e-5);
    CHECK((euler_rate_matrix_inv(theta) * euler_rate_matrix(theta) - Mat3d::Identity())
              .norm() < 1e-12);
  }
}

TEST_CASE("integration step: yaw-only at the origin, gimbal lock raises") {
  Vec3d step = euler_integrate(Vec3d::Zero(), Vec3d(0, 0, 0.8), 0.05);
  CHECK((step - Vec3d(0, 0, 0.04)).norm() < 1e-15);

  CHECK_THROWS_AS(euler_integrate(Vec3d(0, M_PI / 2, 0), Vec3d(0.1, 0, 0), 0.01),
                  std::domain_error);
  CHECK_THROWS_AS(euler_integrate(Vec3d(0, 3 * M_PI / 2, 0), Vec3d(0.1, 0, 0), 0.01),
                  std::domain_error);
}

TEST_CASE("Euler integration drifts with dt while SO(3) stays exact") {
  for (int trial = 0; trial < 10; ++trial) {
    std::uniform_real_distribution<double> mag(1.0, 3.0);
    Vec3d omega = mag(rng) * random_axis();
    const double total = 2.0;

    // SO(3): products of exact exponentials of the constant rate.
    for (double dt : {0.05, 0.01, 0.002}) {
      Rotationd r;
      int steps = static_cast<int>(std::round(total / dt));
      for (int k = 0; k < steps; ++k) r = r * exp_so3(Vec3d(omega * dt));
      CHECK(log_so3(Rotationd(exp_so3(Vec3d(omega * total)).inverse() * r)).norm() < 1e-9);
    }

    double prev = euler_final_error(omega, total, 0.001);
    for (double dt : {0.002, 0.005, 0.01, 0.02}) {
      double err = euler_final_error(omega, total, dt);
      CHECK(err > prev);
      prev = err;
    }
  }
}

TEST_CASE("Euler covariance step structure") {
  ImuNoiseModeld noise{0.01, 1e-9, 1e-9, 1e-9};
  const double dt = 0.02;

  // From zero angles and zero covariance, one step gives sigma^2 dt I.
  Vec3d theta = Vec3d::Zero();
  Mat3d cov = Mat3d::Zero();
  euler_covariance_step(&theta, &cov, Vec3d(0.3, -0.2, 0.5), dt, noise);
  CHECK((cov - noise.gyro_noise_density * noise.gyro_noise_density * dt *
                   Mat3d::Identity())
            .norm() < 1e-12);

  // With negligible noise the update is the pure A Sigma A^T map, which
  // shrinks towards Sigma as dt does.
  ImuNoiseModeld tiny{1e-12, 1e-9, 1e-9, 1e-9};
  Mat3d sigma0;
  sigma0 << 4e-4, 1e-5, 0, 1e-5, 3e-4, 2e-5, 0, 2e-5, 5e-4;
  auto deviation = [&](double step_dt) {
    Vec3d th(0.2, 0.7, -0.4);
    Mat3d c = sigma0;
    euler_covariance_step(&th, &c, Vec3d(1.0, 0.5, -0.8), step_dt, tiny);
    return (c - sigma0).norm();
  };
  double d1 = deviation(0.02);
  double d2 = deviation(0.01);
  CHECK(d2 < 0.6 * d1);

  Vec3d locked(0, M_PI / 2 - 1e-8, 0);
  Mat3d c = Mat3d::Zero();
  CHECK_THROWS_AS(euler_covariance_step(&locked, &c, Vec3d(0.1, 0, 0), dt, noise),
                  std::domain_error);
}

TEST_CASE("SO(3) covariance step tracks sampled rotation noise") {
  ImuNoiseModeld noise{0.01, 1e-9, 1e-9, 1e-9};
  const double dt = 0.01;
  const int steps = 100;
  auto omega_at = [](int k) {
    return Vec3d(0.8 * std::sin(0.05 * k), 0.5, 0.9 * std::cos(0.03 * k));
  };

  Mat3d prop = Mat3d::Zero();
  Rotationd clean;
  for (int k = 0; k < steps; ++k) {
    so3_covariance_step(&prop, omega_at(k), dt, noise);
    clean = clean * exp_so3(Vec3d(omega_at(k) * dt));
  }

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sg = noise.gyro_noise_density / std::sqrt(dt);
  const int kRuns = 4000;
  Mat3d emp = Mat3d::Zero();
  for (int run = 0; run < kRuns; ++run) {
    Rotationd r;
    for (int k = 0; k < steps; ++k) {
      Vec3d w = omega_at(k) + sg * Vec3d(gauss(rng), gauss(rng), gauss(rng));
      r = r * exp_so3(Vec3d(w * dt));
    }
    Vec3d dphi = log_so3(Rotationd(clean.inverse() * r));
    emp += dphi * dphi.transpose();
  }
  emp /= kRuns;
  CHECK((emp - prop).norm() / prop.norm() < 0.1);
}
