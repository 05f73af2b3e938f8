#pragma once

#include "mvk/dataset.hpp"
#include "mvk/itosim.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace mvk {

struct LocalCovariance {
  Eigen::MatrixXd matrix;  // symmetric PSD
  std::size_t point_index = 0;
  std::size_t view_id = 0;
  int numerical_rank = 0;  // filled by assign_ranks
};

struct NeighborhoodSpec {
  enum class Mode { Cloud, Radius, Knn };
  Mode mode = Mode::Knn;
  double radius = 0.0;  // Radius: same units as the view coordinates
  std::size_t k = 20;   // Knn: neighbor count including the point itself

  static NeighborhoodSpec cloud() { return {Mode::Cloud, 0.0, 0}; }
  static NeighborhoodSpec within(double r) { return {Mode::Radius, r, 0}; }
  static NeighborhoodSpec nearest(std::size_t k) { return {Mode::Knn, 0.0, k}; }
  void validate() const;
};

/// Sample covariance (divisor N-1) of the cloud, divided by dt.
LocalCovariance covariance_from_cloud(const PointCloud& cloud, std::size_t view_id = 0);

/// Same estimate as simulating the cloud and calling covariance_from_cloud,
/// without storing the points.
LocalCovariance covariance_from_simulation(const Eigen::VectorXd& state, const ObservationMap& map,
                                           std::size_t n_c, double dt, std::uint64_t seed,
                                           const std::vector<Interval>& reflect = {},
                                           std::size_t point_index = 0, std::size_t view_id = 0);

/// Sample covariance of the neighbors of point i (the point itself included).
LocalCovariance covariance_from_neighborhood(const ViewMatrix& view, std::size_t i,
                                             const NeighborhoodSpec& spec, std::size_t view_id = 0);

/// Neighborhood covariances for every point of the view.
std::vector<LocalCovariance> neighborhood_covariances(const ViewMatrix& view,
                                                      const NeighborhoodSpec& spec,
                                                      std::size_t view_id = 0, int workers = 1);

/// Indices of the points within `radius` of point i (inclusive), or its k nearest.
std::vector<std::size_t> neighbors(const ViewMatrix& view, std::size_t i, const NeighborhoodSpec& spec);

/// Number of singular values strictly above gamma.
int numerical_rank(const Eigen::MatrixXd& c, double gamma);

/// U diag(1/lambda for lambda > gamma, else 0) U^T.
Eigen::MatrixXd pseudo_inverse(const Eigen::MatrixXd& c, double gamma);

/// Lower median.
int median_rank(std::vector<int> ranks);

/// 1e-6 times the largest singular value over all covariances.
double default_gamma(const std::vector<std::vector<LocalCovariance>>& per_view);

void assign_ranks(std::vector<std::vector<LocalCovariance>>& per_view, double gamma);

/// Sample covariance of the rows of `points` about their mean (divisor N-1).
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& points);

}  // namespace mvk
