#pragma once

#include "mvk/dataset.hpp"
#include "mvk/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace mvk {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
};

/// Drift a^r evaluated at coordinate r's current value.
using Drift = std::function<double(std::size_t coordinate, double value)>;

struct ItoProcessSpec {
  std::size_t dim = 1;
  Drift drift;  // empty means zero drift
  double dt = 0.0;
  /// One interval per coordinate; empty means no boundary.
  std::vector<Interval> reflect;
  std::uint64_t seed = 0;
};

/// Mirror-folds x into [lo, hi].
double reflect_into(double x, Interval box);

/// Euler-Maruyama path with `steps` rows; row 0 is `start`.
Eigen::MatrixXd simulate_trajectory(const ItoProcessSpec& spec, std::size_t steps,
                                    const Eigen::VectorXd& start);

/// x^k = sum_q a(k,q) * z_q^b(k,q) over the stacked state z = (theta, psi).
struct PolynomialView {
  Eigen::MatrixXd coefficients;  // outputs x inputs
  Eigen::MatrixXi exponents;     // nonzero integers

  /// Coefficients uniform in [-2, 2], exponents uniform in {-3,-2,-1,1,2,3}.
  static PolynomialView random(Rng& rng, Eigen::Index outputs = 3, Eigen::Index inputs = 3);

  Eigen::Index outputs() const { return coefficients.rows(); }
  Eigen::Index inputs() const { return coefficients.cols(); }
  /// True when z has a zero component under a negative exponent.
  bool singular_at(const Eigen::VectorXd& z) const;
};

/// ((2+cos 8t)cos t, (2+cos 8t)sin t, 3t^2 - t)
struct HelixMap {};

/// Flower-shaped closed curve with per-view phases Z.
struct FlowerView {
  std::array<double, 3> phases{0.0, 0.0, 0.0};
};

using ObservationMap = std::variant<PolynomialView, HelixMap, FlowerView>;

Eigen::Index map_input_dim(const ObservationMap& map);
Eigen::Index map_output_dim(const ObservationMap& map);

Eigen::VectorXd apply_polynomial_view(const Eigen::VectorXd& theta, double psi,
                                      const PolynomialView& map);
Eigen::Vector3d generate_helix(double theta);
Eigen::Vector3d helix_derivative(double theta);
Eigen::Vector3d generate_flower_view(double theta, const std::array<double, 3>& phases);

/// Throws SingularMap for a zero base under a negative exponent.
void apply_map(const ObservationMap& map, const Eigen::VectorXd& z, Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd apply_map(const ObservationMap& map, const Eigen::VectorXd& z);
/// outputs x inputs Jacobian.
Eigen::MatrixXd map_jacobian(const ObservationMap& map, const Eigen::VectorXd& z);

struct PointCloud {
  std::size_t center_index = 0;
  Eigen::MatrixXd points;  // N_c x m
  double dt = 0.0;
};

/// Receives each mapped cloud point in generation order.
using CloudSink = std::function<void(const Eigen::VectorXd&)>;

/// One zero-drift Euler-Maruyama step of length dt from `state`, repeated
/// n_c times independently and pushed through `map`. Coordinates with a
/// reflect interval are folded back after the step.
void simulate_cloud(const Eigen::VectorXd& state, const ObservationMap& map, std::size_t n_c,
                    double dt, std::uint64_t seed, const std::vector<Interval>& reflect,
                    const CloudSink& sink);

PointCloud sample_point_cloud(const Eigen::VectorXd& state, const ObservationMap& map,
                              std::size_t n_c, double dt, std::uint64_t seed,
                              const std::vector<Interval>& reflect = {},
                              std::size_t center_index = 0);

/// Uniform samples in the d-dimensional box.
Eigen::MatrixXd sample_uniform_box(std::size_t n, const std::vector<Interval>& box, Rng& rng);

enum class CenterSampler { Uniform, ReflectedBrownian };

struct BrownianConsensus {
  MultiViewDataset dataset;          // ground truth = theta (n x 2)
  Eigen::MatrixXd psi;               // n x zeta interference values
  std::vector<PolynomialView> maps;  // one per view
};

/// theta in the unit square, one interference coordinate per view in [0, 1],
/// random polynomial views. Samples that make a map singular are redrawn.
BrownianConsensus make_brownian_consensus(std::size_t n, std::size_t zeta, std::uint64_t seed,
                                          CenterSampler sampler = CenterSampler::Uniform,
                                          double trajectory_dt = 0.005);

/// theta uniform in [0, 2pi), single helix view.
MultiViewDataset make_helix_dataset(std::size_t n, std::uint64_t seed);

struct FlowerData {
  MultiViewDataset dataset;
  std::vector<FlowerView> views;
};

/// theta uniform in [0, 2pi), zeta flower views with phases uniform in [0, 2pi).
FlowerData make_flower_dataset(std::size_t n, std::size_t zeta, std::uint64_t seed);

}  // namespace mvk
