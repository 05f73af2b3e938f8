#include "mvk/localcov.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using support::code_of;

TEST_SUITE("localcov") {
  TEST_CASE("identical cloud points give a zero covariance of rank 0") {
    mvk::PointCloud cloud{0, Eigen::MatrixXd::Ones(5, 3), 0.01};
    const auto c = mvk::covariance_from_cloud(cloud);
    CHECK(c.matrix.isZero(0.0));
    CHECK(mvk::numerical_rank(c.matrix, 1e-12) == 0);
  }

  TEST_CASE("unbiased two-point variance") {
    Eigen::MatrixXd pts(2, 1);
    pts << 0.0, 2.0;
    const auto c = mvk::covariance_from_cloud({0, pts, 1.0});
    CHECK(c.matrix(0, 0) == doctest::Approx(2.0));
  }

  TEST_CASE("cloud covariance divides by dt and needs two points") {
    Eigen::MatrixXd pts(3, 1);
    pts << 1.0, 2.0, 3.0;
    CHECK(mvk::covariance_from_cloud({0, pts, 0.5}).matrix(0, 0) == doctest::Approx(2.0));
    CHECK(code_of([] { mvk::covariance_from_cloud({0, Eigen::MatrixXd::Zero(1, 2), 1.0}); }) ==
          mvk::ErrorCode::InsufficientSamples);
  }

  TEST_CASE("linear-map cloud covariance estimates A A^T") {
    Eigen::Matrix3d a;
    a << 0.8, -0.4, 0.3, 0.1, 1.1, -0.6, -0.7, 0.2, 0.9;
    const mvk::PolynomialView map{a, Eigen::Matrix3i::Ones()};
    const auto c = mvk::covariance_from_simulation(Eigen::Vector3d(0.5, 0.5, 0.5), map, 100000, 0.005, 4);
    const Eigen::Matrix3d expected = a * a.transpose();
    CHECK((c.matrix - expected).norm() / expected.norm() < 0.05);
  }

  TEST_CASE("streaming and stored cloud covariances agree") {
    const mvk::ObservationMap map = mvk::FlowerView{{0.2, 0.9, 1.4}};
    const Eigen::VectorXd state = Eigen::VectorXd::Constant(1, 0.7);
    const auto stored = mvk::covariance_from_cloud(mvk::sample_point_cloud(state, map, 500, 0.01, 12));
    const auto streamed = mvk::covariance_from_simulation(state, map, 500, 0.01, 12);
    CHECK((stored.matrix - streamed.matrix).norm() < 1e-10 * stored.matrix.norm());
  }

  TEST_CASE("covariances are exactly symmetric") {
    const Eigen::MatrixXd pts = Eigen::MatrixXd::Random(50, 4);
    const auto c = mvk::sample_covariance(pts);
    CHECK(c == c.transpose());
  }

  TEST_CASE("covariance is invariant to point order") {
    const Eigen::MatrixXd pts = Eigen::MatrixXd::Random(30, 3);
    const Eigen::MatrixXd reversed = pts.colwise().reverse();
    CHECK((mvk::sample_covariance(pts) - mvk::sample_covariance(reversed)).norm() < 1e-14);
  }

  TEST_CASE("neighborhood covariance") {
    SUBCASE("identical points") {
      const Eigen::MatrixXd view = Eigen::MatrixXd::Constant(6, 2, 3.0);
      CHECK(mvk::covariance_from_neighborhood(view, 0, mvk::NeighborhoodSpec::nearest(4)).matrix.isZero(0.0));
    }
    SUBCASE("points on a line have rank 1") {
      Eigen::MatrixXd view(21, 3);
      for (int i = 0; i < 21; ++i) view.row(i) = (i * 0.05) * Eigen::RowVector3d(1.0, -2.0, 0.5);
      const auto c = mvk::covariance_from_neighborhood(view, 10, mvk::NeighborhoodSpec::within(0.3));
      CHECK(mvk::numerical_rank(c.matrix, mvk::default_gamma({{c}})) == 1);
    }
    SUBCASE("a radius covering everything gives the global covariance") {
      const Eigen::MatrixXd view = Eigen::MatrixXd::Random(25, 3);
      const auto c = mvk::covariance_from_neighborhood(view, 3, mvk::NeighborhoodSpec::within(100.0));
      CHECK((c.matrix - mvk::sample_covariance(view)).norm() < 1e-14);
    }
    SUBCASE("isolated points are rejected") {
      Eigen::MatrixXd view(2, 1);
      view << 0.0, 10.0;
      CHECK(code_of([&] { mvk::covariance_from_neighborhood(view, 0, mvk::NeighborhoodSpec::within(1.0)); }) ==
            mvk::ErrorCode::InsufficientSamples);
    }
  }

  TEST_CASE("kNN includes the point and breaks ties by index") {
    Eigen::MatrixXd view(5, 1);
    view << 0.0, 1.0, -1.0, 2.0, -2.0;
    const auto nb = mvk::neighbors(view, 0, mvk::NeighborhoodSpec::nearest(3));
    CHECK(nb == std::vector<std::size_t>{0, 1, 2});
    CHECK(code_of([] { mvk::NeighborhoodSpec::nearest(1).validate(); }) == mvk::ErrorCode::InvalidArgument);
    CHECK(code_of([] { mvk::NeighborhoodSpec::within(0.0).validate(); }) == mvk::ErrorCode::InvalidArgument);
  }

  TEST_CASE("parallel neighborhood covariances match the serial run") {
    const Eigen::MatrixXd view = Eigen::MatrixXd::Random(60, 3);
    const auto serial = mvk::neighborhood_covariances(view, mvk::NeighborhoodSpec::nearest(8), 0, 1);
    const auto parallel = mvk::neighborhood_covariances(view, mvk::NeighborhoodSpec::nearest(8), 0, 4);
    for (std::size_t i = 0; i < serial.size(); ++i) CHECK(serial[i].matrix == parallel[i].matrix);
  }

  TEST_CASE("numerical rank") {
    CHECK(mvk::numerical_rank(Eigen::Vector3d(5.0, 1.0, 1e-9).asDiagonal().toDenseMatrix(), 1e-6) == 2);
    CHECK(mvk::numerical_rank(Eigen::Matrix3d::Zero(), 0.1) == 0);
    CHECK(mvk::numerical_rank(Eigen::MatrixXd::Identity(4, 4), 0.5) == 4);
  }

  TEST_CASE("numerical rank is monotone in gamma and rotation invariant") {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 20; ++rep) {
      const Eigen::MatrixXd c = oracle::random_spd(5, rng, 1e-6, 3.0);
      int last = 6;
      for (double g : {0.0, 1e-7, 1e-4, 0.1, 1.0, 10.0}) {
        const int r = mvk::numerical_rank(c, g);
        CHECK(r <= last);
        last = r;
      }
      const Eigen::MatrixXd q = oracle::random_spd(5, rng).householderQr().householderQ();
      CHECK(mvk::numerical_rank(q * c * q.transpose(), 0.5) == mvk::numerical_rank(c, 0.5));
    }
  }

  TEST_CASE("pseudo-inverse") {
    CHECK(mvk::pseudo_inverse(Eigen::Matrix3d::Identity(), 1e-8).isApprox(Eigen::Matrix3d::Identity()));
    const Eigen::Matrix2d c = Eigen::Vector2d(4.0, 0.0).asDiagonal();
    const Eigen::MatrixXd p = mvk::pseudo_inverse(c, 1e-8);
    CHECK(p(0, 0) == doctest::Approx(0.25));
    CHECK(std::abs(p(1, 1)) < 1e-15);
    CHECK(std::abs(p(0, 1)) < 1e-15);

    std::mt19937_64 rng(1);
    const Eigen::MatrixXd spd = oracle::random_spd(5, rng);
    CHECK((mvk::pseudo_inverse(spd, 0.0) * spd - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff() < 1e-10);
  }

  TEST_CASE("pseudo-inverse satisfies the Moore-Penrose identities and round-trips") {
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 10; ++rep) {
      Eigen::MatrixXd c = oracle::random_spd(6, rng);
      // Drop two directions to make c rank deficient.
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
      Eigen::VectorXd lambda = es.eigenvalues();
      lambda(0) = 0.0;
      lambda(1) = 1e-12;
      c = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
      c = (0.5 * (c + c.transpose())).eval();
      const double gamma = 1e-8;
      const Eigen::MatrixXd p = mvk::pseudo_inverse(c, gamma);
      lambda(1) = 0.0;
      const Eigen::MatrixXd truncated = es.eigenvectors() * lambda.asDiagonal() * es.eigenvectors().transpose();
      CHECK((truncated * p * truncated - truncated).norm() < 1e-10 * truncated.norm());
      CHECK((p * truncated * p - p).norm() < 1e-10 * p.norm());
      CHECK(((truncated * p).transpose() - truncated * p).norm() < 1e-10);
      CHECK(((p * truncated).transpose() - p * truncated).norm() < 1e-10);
      CHECK((mvk::pseudo_inverse(p, 1e-8 * p.norm()) - truncated).norm() < 1e-8 * truncated.norm());
    }
  }

  TEST_CASE("median rank is the lower median") {
    CHECK(mvk::median_rank({2, 2, 2}) == 2);
    CHECK(mvk::median_rank({1, 2, 3, 4}) == 2);
    CHECK(mvk::median_rank({3}) == 3);
    CHECK(mvk::median_rank({4, 1, 3}) == 3);
    CHECK(code_of([] { mvk::median_rank({}); }) == mvk::ErrorCode::EmptyInput);
  }

  TEST_CASE("default gamma and rank assignment") {
    std::vector<std::vector<mvk::LocalCovariance>> per_view(2);
    per_view[0].push_back({Eigen::Vector2d(10.0, 1e-9).asDiagonal().toDenseMatrix(), 0, 0, 0});
    per_view[1].push_back({Eigen::Vector2d(2.0, 1.0).asDiagonal().toDenseMatrix(), 0, 1, 0});
    const double gamma = mvk::default_gamma(per_view);
    CHECK(gamma == doctest::Approx(1e-5));
    mvk::assign_ranks(per_view, gamma);
    CHECK(per_view[0][0].numerical_rank == 1);
    CHECK(per_view[1][0].numerical_rank == 2);
  }
}
