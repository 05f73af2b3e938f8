#include "mvk/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using support::code_of;

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::MatrixXd circle(const Eigen::VectorXd& theta, double r, Eigen::Vector2d c = Eigen::Vector2d::Zero()) {
  Eigen::MatrixXd e(theta.size(), 2);
  for (Eigen::Index i = 0; i < theta.size(); ++i) e.row(i) << c(0) + r * std::cos(theta(i)), c(1) + r * std::sin(theta(i));
  return e;
}

Eigen::VectorXd uniform_angles(Eigen::Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) t(i) = u(rng);
  return t;
}

}  // namespace

TEST_SUITE("metrics") {
  TEST_CASE("ground-truth kernel") {
    Eigen::MatrixXd theta(2, 2);
    theta << 0.0, 0.0, 0.1, 0.0;
    const auto full = mvk::ground_truth_kernel(theta, 0.02, mvk::KernelConvention::Full);
    CHECK(full.values(0, 1) == doctest::Approx(std::exp(-0.5)));
    const auto half = mvk::ground_truth_kernel(theta, 0.02, mvk::KernelConvention::Half);
    CHECK(half.values(0, 1) == doctest::Approx(std::exp(-0.25)));
    CHECK(full.values(0, 0) == 1.0);
    Eigen::MatrixXd same = Eigen::MatrixXd::Constant(3, 2, 0.4);
    CHECK(mvk::ground_truth_kernel(same, 0.1, mvk::KernelConvention::Full).values.isOnes(0.0));
    CHECK(code_of([&] { mvk::ground_truth_kernel(theta, 0.0, mvk::KernelConvention::Full); }) ==
          mvk::ErrorCode::InvalidArgument);
  }

  TEST_CASE("ground-truth kernels satisfy the kernel invariants") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd theta(80, 3);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = u(rng);
    CHECK(oracle::kernel_invariants(mvk::ground_truth_kernel(theta, 0.05, mvk::KernelConvention::Full).values).empty());
  }

  TEST_CASE("Q factor") {
    const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
    CHECK(mvk::q_factor(a, a) == 0.0);
    Eigen::MatrixXd b = a;
    b(0, 1) = b(1, 0) = 1.0;
    CHECK(mvk::q_factor(a, b) == doctest::Approx(std::sqrt(2.0) / 2.0));
    CHECK(mvk::q_factor(b, a) == doctest::Approx(1.0));
    CHECK(code_of([] { mvk::q_factor(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)); }) ==
          mvk::ErrorCode::ShapeMismatch);
  }

  TEST_CASE("circle fit") {
    const Eigen::VectorXd t = uniform_angles(200, 2);
    CHECK(mvk::circle_fit_residual(circle(t, 1.0)) < 1e-12);
    CHECK(mvk::circle_fit_residual(circle(t, 0.003, {5.0, -2.0})) < 1e-10);

    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0.0, 0.01);
    Eigen::MatrixXd noisy = circle(t, 1.0);
    for (Eigen::Index i = 0; i < noisy.size(); ++i) noisy(i) += g(rng);
    CHECK(mvk::circle_fit_residual(noisy) == doctest::Approx(0.01).epsilon(0.2));

    Eigen::MatrixXd line(10, 2);
    for (int i = 0; i < 10; ++i) line.row(i) << i, 2.0 * i;
    CHECK(code_of([&] { mvk::circle_fit_residual(line); }) == mvk::ErrorCode::DegenerateFit);
  }

  TEST_CASE("circle fit is invariant to similarity transforms") {
    const Eigen::VectorXd t = uniform_angles(100, 4);
    Eigen::MatrixXd e = circle(t, 1.0);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g(0.0, 0.05);
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) += g(rng);
    const double base = mvk::circle_fit_residual(e);
    const Eigen::Matrix2d rot = Eigen::Rotation2Dd(0.7).toRotationMatrix();
    const Eigen::MatrixXd moved = ((3.5 * e * rot.transpose()).rowwise() + Eigen::RowVector2d(1.0, -4.0)).eval();
    CHECK(mvk::circle_fit_residual(moved) == doctest::Approx(base).epsilon(1e-8));
  }

  TEST_CASE("angle correlation") {
    const Eigen::VectorXd t = uniform_angles(300, 6);
    CHECK(mvk::angle_correlation(circle(t, 2.0), t) == doctest::Approx(1.0));
    CHECK(mvk::angle_correlation(circle(-t, 2.0), t) == doctest::Approx(1.0));
    CHECK(mvk::angle_correlation(circle((t.array() + 1.3).matrix(), 2.0), t) == doctest::Approx(1.0));
    // Independent angles carry no correlation.
    CHECK(mvk::angle_correlation(circle(uniform_angles(300, 7), 1.0), t) < 0.2);
    CHECK(code_of([&] { mvk::angle_correlation(circle(t, 1.0), Eigen::VectorXd()); }) ==
          mvk::ErrorCode::MissingGroundTruth);
  }

  TEST_CASE("max angular gap") {
    Eigen::VectorXd even(8);
    for (int i = 0; i < 8; ++i) even(i) = i * kPi / 4.0;
    CHECK(mvk::max_angular_gap(circle(even, 1.0, {3.0, 3.0})) == doctest::Approx(kPi / 4.0));
    Eigen::VectorXd arc(5);
    arc << 0.0, 0.1, 0.2, 0.3, kPi;
    CHECK(mvk::max_angular_gap(circle(arc, 1.0)) > kPi / 2.0);
  }

  TEST_CASE("distance error curve vanishes for linear views") {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd theta(300, 2);
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = u(rng);
    Eigen::Matrix<double, 3, 2> a;
    a << 1.0, 0.5, -0.3, 2.0, 0.7, -1.1;
    const Eigen::MatrixXd view = theta * a.transpose();
    const mvk::MultiViewDataset ds({view}, theta);
    const auto curve = mvk::distance_error_curve(ds, {0.3, 0.6});
    REQUIRE(curve.size() == 2);
    for (const auto& p : curve) {
      CHECK(p.pairs > 0);
      CHECK(p.mean_error < 1e-8);
    }
  }

  TEST_CASE("Spearman correlation") {
    CHECK(mvk::spearman_correlation({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(mvk::spearman_correlation({1, 2, 3, 4}, {9, 4, 1, 0}) == doctest::Approx(-1.0));
    CHECK(mvk::spearman_correlation({1, 2, 3, 4, 5}, {1, 8, 27, 64, 125}) == doctest::Approx(1.0));
    // Ties use average ranks: x ranks 1 2.5 2.5 4.
    CHECK(mvk::spearman_correlation({1, 2, 2, 3}, {1, 2, 3, 4}) == doctest::Approx(0.9486832980505138));
    CHECK(code_of([] { mvk::spearman_correlation({1.0}, {2.0}); }) == mvk::ErrorCode::InsufficientSamples);
    CHECK(code_of([] { mvk::spearman_correlation({1, 1}, {1, 2}); }) == mvk::ErrorCode::InvalidArgument);
  }
}
