#include "mvk/diffusion.hpp"
#include "mvk/metrics.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using support::code_of;

namespace {

mvk::KernelMatrix gaussian_kernel(const Eigen::MatrixXd& x, double eps) {
  Eigen::MatrixXd d(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.rows(); ++j) d(i, j) = (x.row(i) - x.row(j)).squaredNorm();
  }
  return mvk::kernel_from_distances(d, eps);
}

Eigen::MatrixXd random_points(Eigen::Index n, Eigen::Index dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::MatrixXd x(n, dim);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = u(rng);
  return x;
}

}  // namespace

TEST_SUITE("diffusion") {
  TEST_CASE("row normalization") {
    const mvk::KernelMatrix id{Eigen::MatrixXd::Identity(4, 4)};
    CHECK(mvk::row_normalize(id) == Eigen::MatrixXd::Identity(4, 4));
    const mvk::KernelMatrix ones{Eigen::MatrixXd::Ones(4, 4)};
    CHECK(mvk::row_normalize(ones).isApprox(Eigen::MatrixXd::Constant(4, 4, 0.25)));
    const auto p = mvk::row_normalize(gaussian_kernel(random_points(30, 2, 1), 0.1));
    CHECK((p.rowwise().sum().array() - 1.0).abs().maxCoeff() < 1e-12);
  }

  TEST_CASE("identity kernel is flagged as degenerate") {
    const mvk::KernelMatrix id{Eigen::MatrixXd::Identity(5, 5)};
    const auto e = mvk::diffusion_map(id, 2);
    CHECK(e.degenerate);
    CHECK(e.eigenvalues(0) == doctest::Approx(1.0));
    CHECK(e.eigenvalues(1) == doctest::Approx(1.0));
  }

  TEST_CASE("top eigenvalue is 1 and agrees with power iteration") {
    const auto k = gaussian_kernel(random_points(60, 2, 2), 0.05);
    const auto e = mvk::diffusion_map(k, 2);
    CHECK(std::abs(e.eigenvalues(0) - 1.0) < 1e-10);
    CHECK(std::abs(oracle::power_iteration(mvk::row_normalize(k)) - 1.0) < 1e-10);
    CHECK_FALSE(e.degenerate);
    CHECK(oracle::kernel_invariants(k.values).empty());
    // psi_0 is constant.
    CHECK((e.eigenvectors.col(0).array() - e.eigenvectors(0, 0)).abs().maxCoeff() < 1e-8);
  }

  TEST_CASE("eigenvalues match the nonsymmetric solver") {
    for (Eigen::Index n : {20, 90, 200}) {
      const auto k = gaussian_kernel(random_points(n, 2, static_cast<std::uint64_t>(n)), 0.05);
      const auto expected = oracle::markov_spectrum(k.values);
      const auto all = mvk::markov_eigenvalues(k);
      REQUIRE(all.size() == n);
      for (Eigen::Index i = 0; i < n; ++i) CHECK(std::abs(all(i) - expected[static_cast<std::size_t>(i)]) < 1e-8);
      const auto e = mvk::diffusion_map(k, 3, 1, 10);
      for (Eigen::Index i = 0; i < e.eigenvalues.size(); ++i) {
        CHECK(std::abs(e.eigenvalues(i) - expected[static_cast<std::size_t>(i)]) < 1e-8);
      }
    }
  }

  TEST_CASE("eigenvectors are right eigenvectors of P with the stated normalization") {
    const auto k = gaussian_kernel(random_points(150, 2, 3), 0.03);
    const auto e = mvk::diffusion_map(k, 4, 1);
    const Eigen::MatrixXd p = mvk::row_normalize(k);
    const Eigen::VectorXd d = k.values.rowwise().sum();
    const Eigen::VectorXd pi = d / d.sum();
    for (Eigen::Index c = 0; c < e.eigenvectors.cols(); ++c) {
      const Eigen::VectorXd v = e.eigenvectors.col(c);
      CHECK((p * v - e.eigenvalues(c) * v).norm() < 1e-8 * v.norm());
      CHECK(pi.dot(v.cwiseProduct(v)) == doctest::Approx(1.0).epsilon(1e-10));
      Eigen::Index first = 0;
      while (std::abs(v(first)) <= 1e-12 * v.cwiseAbs().maxCoeff()) ++first;
      CHECK(v(first) > 0.0);
    }
  }

  TEST_CASE("partial solve agrees with the full solve") {
    const auto k = gaussian_kernel(random_points(300, 2, 4), 0.02);
    const auto partial = mvk::diffusion_map(k, 2, 1, 8);
    const auto full = mvk::diffusion_map(k, 2, 1, 300);
    for (Eigen::Index c = 0; c < 8; ++c) CHECK(std::abs(partial.eigenvalues(c) - full.eigenvalues(c)) < 1e-10);
    CHECK((partial.coordinates - full.coordinates).cwiseAbs().maxCoeff() < 1e-7);
  }

  TEST_CASE("diffusion time scales coordinates by lambda^t") {
    const auto k = gaussian_kernel(random_points(40, 2, 5), 0.1);
    const auto e1 = mvk::diffusion_map(k, 2, 1);
    const auto e3 = mvk::diffusion_map(k, 2, 3);
    for (Eigen::Index c = 0; c < 2; ++c) {
      const double l = e1.eigenvalues(c + 1);
      CHECK((e3.coordinates.col(c) - l * l * e1.coordinates.col(c)).norm() < 1e-10);
    }
  }

  TEST_CASE("two separated blocks split by the sign of psi_1") {
    Eigen::MatrixXd x(20, 1);
    for (int i = 0; i < 10; ++i) {
      x(i, 0) = 0.01 * i;
      x(10 + i, 0) = 1.5 + 0.01 * i;
    }
    const auto e = mvk::diffusion_map(gaussian_kernel(x, 0.5), 1);
    const double s = e.eigenvectors(0, 1);
    for (int i = 0; i < 10; ++i) {
      CHECK(e.eigenvectors(i, 1) * s > 0.0);
      CHECK(e.eigenvectors(10 + i, 1) * s < 0.0);
    }
  }

  TEST_CASE("point permutation permutes the embedding") {
    const Eigen::MatrixXd x = random_points(50, 2, 6);
    Eigen::PermutationMatrix<Eigen::Dynamic> perm(50);
    perm.setIdentity();
    std::mt19937_64 rng(6);
    std::shuffle(perm.indices().data(), perm.indices().data() + 50, rng);
    const Eigen::MatrixXd px = perm * x;
    const auto a = mvk::diffusion_map(gaussian_kernel(x, 0.05), 2);
    const auto b = mvk::diffusion_map(gaussian_kernel(px, 0.05), 2);
    CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::MatrixXd pa = perm * a.coordinates;
    for (Eigen::Index c = 0; c < 2; ++c) {
      const double err = std::min((pa.col(c) - b.coordinates.col(c)).norm(), (pa.col(c) + b.coordinates.col(c)).norm());
      CHECK(err < 1e-8);
    }
  }

  TEST_CASE("spectral lines") {
    const double eps = 0.02;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    const auto lines = mvk::spectral_lines({1.0, std::exp(-pi2 * eps / 2.0), std::exp(-2.0 * pi2 * eps)}, eps);
    CHECK(lines[0] == 0.0);
    CHECK(lines[1] == doctest::Approx(1.0));
    CHECK(lines[2] == doctest::Approx(4.0));
    CHECK(code_of([] { mvk::spectral_lines({1.0, 0.0}, 0.1); }) == mvk::ErrorCode::NonPositiveEigenvalue);
    CHECK(code_of([] { mvk::spectral_lines({-0.2}, 0.1); }) == mvk::ErrorCode::NonPositiveEigenvalue);
    CHECK(mvk::spectral_epsilon(0.02, mvk::KernelConvention::Full) == doctest::Approx(0.01));
    CHECK(mvk::spectral_epsilon(0.02, mvk::KernelConvention::Half) == doctest::Approx(0.02));
  }

  TEST_CASE("uniform unit-square ground truth shows the Neumann line pattern") {
    // Regular grid: the lowest Laplacian modes of the square give k^2 + l^2.
    const int side = 30;
    Eigen::MatrixXd theta(side * side, 2);
    for (int a = 0; a < side; ++a) {
      for (int b = 0; b < side; ++b) theta.row(a * side + b) << (a + 0.5) / side, (b + 0.5) / side;
    }
    const double eps = 0.002;
    const auto k = mvk::ground_truth_kernel(theta, eps, mvk::KernelConvention::Full);
    const auto ev = mvk::markov_eigenvalues(k, 6);
    const auto lines = mvk::spectral_lines({ev.data(), ev.data() + ev.size()},
                                           mvk::spectral_epsilon(eps, mvk::KernelConvention::Full));
    // Grid spacing is comparable to sqrt(eps), so allow a small discretization bias.
    const std::vector<double> expected{0, 1, 1, 2, 4, 4};
    for (std::size_t i = 0; i < expected.size(); ++i) CHECK(std::abs(lines[i] - expected[i]) < 0.25);
  }

  TEST_CASE("non-positive degrees are rejected") {
    mvk::KernelMatrix bad{Eigen::MatrixXd::Zero(3, 3)};
    CHECK(code_of([&] { mvk::row_normalize(bad); }) == mvk::ErrorCode::InvalidArgument);
    CHECK(code_of([&] { mvk::diffusion_map(bad, 1); }) == mvk::ErrorCode::InvalidArgument);
  }
}
