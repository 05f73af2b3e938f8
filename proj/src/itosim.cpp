#include "mvk/itosim.hpp"

#include "mvk/error.hpp"

#include <cmath>
#include <numbers>

namespace mvk {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double ipow(double base, int exponent) {
  if (exponent < 0) return 1.0 / ipow(base, -exponent);
  double result = 1.0;
  for (int e = 0; e < exponent; ++e) result *= base;
  return result;
}

double wrap_two_pi(double x) {
  double r = std::fmod(x, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;  // fmod of a tiny negative can round up to 2pi
  return r;
}

void check_polynomial(const PolynomialView& p) {
  if (p.coefficients.rows() != p.exponents.rows() || p.coefficients.cols() != p.exponents.cols()) {
    fail(ErrorCode::ShapeMismatch, "coefficient and exponent shapes differ");
  }
}

}  // namespace

double reflect_into(double x, Interval box) {
  if (!(box.lo < box.hi)) fail(ErrorCode::InvalidArgument, "reflect bounds need lo < hi");
  if (x >= box.lo && x <= box.hi) return x;
  const double width = box.hi - box.lo;
  double r = std::fmod(x - box.lo, 2.0 * width);
  if (r < 0.0) r += 2.0 * width;
  return r <= width ? box.lo + r : box.hi - (r - width);
}

Eigen::MatrixXd simulate_trajectory(const ItoProcessSpec& spec, std::size_t steps,
                                    const Eigen::VectorXd& start) {
  if (steps < 1) fail(ErrorCode::InvalidArgument, "trajectory needs at least one step");
  if (spec.dim == 0) fail(ErrorCode::InvalidArgument, "process dimension must be positive");
  if (!(spec.dt >= 0.0) || !std::isfinite(spec.dt)) fail(ErrorCode::InvalidArgument, "dt must be >= 0");
  if (static_cast<std::size_t>(start.size()) != spec.dim) {
    fail(ErrorCode::ShapeMismatch, "start state has wrong dimension");
  }
  if (!spec.reflect.empty() && spec.reflect.size() != spec.dim) {
    fail(ErrorCode::ShapeMismatch, "one reflect interval is required per coordinate");
  }

  const auto dim = static_cast<Eigen::Index>(spec.dim);
  Eigen::MatrixXd path(static_cast<Eigen::Index>(steps), dim);
  Eigen::VectorXd state = start;
  if (!spec.reflect.empty()) {
    for (Eigen::Index r = 0; r < dim; ++r) state(r) = reflect_into(state(r), spec.reflect[r]);
  }
  path.row(0) = state.transpose();

  Rng rng(spec.seed);
  std::normal_distribution<double> normal;
  const double sqrt_dt = std::sqrt(spec.dt);
  for (std::size_t t = 1; t < steps; ++t) {
    for (Eigen::Index r = 0; r < dim; ++r) {
      double drift = 0.0;
      if (spec.drift) {
        drift = spec.drift(static_cast<std::size_t>(r), state(r));
        if (!std::isfinite(drift)) {
          fail(ErrorCode::DriftDiverged, "drift of coordinate " + std::to_string(r) +
                                             " is not finite at step " + std::to_string(t));
        }
      }
      const double next = state(r) + drift * spec.dt + sqrt_dt * normal(rng);
      state(r) = spec.reflect.empty() ? next : reflect_into(next, spec.reflect[r]);
    }
    path.row(static_cast<Eigen::Index>(t)) = state.transpose();
  }
  return path;
}

PolynomialView PolynomialView::random(Rng& rng, Eigen::Index outputs, Eigen::Index inputs) {
  static constexpr int kExponents[] = {-3, -2, -1, 1, 2, 3};
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::uniform_int_distribution<int> pick(0, 5);
  PolynomialView p;
  p.coefficients.resize(outputs, inputs);
  p.exponents.resize(outputs, inputs);
  for (Eigen::Index k = 0; k < outputs; ++k) {
    for (Eigen::Index q = 0; q < inputs; ++q) {
      p.coefficients(k, q) = coef(rng);
      p.exponents(k, q) = kExponents[pick(rng)];
    }
  }
  return p;
}

bool PolynomialView::singular_at(const Eigen::VectorXd& z) const {
  for (Eigen::Index q = 0; q < inputs(); ++q) {
    if (z(q) != 0.0) continue;
    for (Eigen::Index k = 0; k < outputs(); ++k) {
      if (exponents(k, q) < 0 && coefficients(k, q) != 0.0) return true;
    }
  }
  return false;
}

Eigen::Index map_input_dim(const ObservationMap& map) {
  if (const auto* p = std::get_if<PolynomialView>(&map)) return p->inputs();
  return 1;
}

Eigen::Index map_output_dim(const ObservationMap& map) {
  if (const auto* p = std::get_if<PolynomialView>(&map)) return p->outputs();
  return 3;
}

Eigen::Vector3d generate_helix(double t) {
  const double r = 2.0 + std::cos(8.0 * t);
  return {r * std::cos(t), r * std::sin(t), 3.0 * t * t - t};
}

Eigen::Vector3d helix_derivative(double t) {
  const double r = 2.0 + std::cos(8.0 * t);
  const double dr = -8.0 * std::sin(8.0 * t);
  return {dr * std::cos(t) - r * std::sin(t), dr * std::sin(t) + r * std::cos(t), 6.0 * t - 1.0};
}

Eigen::Vector3d generate_flower_view(double theta, const std::array<double, 3>& z) {
  const double u1 = theta + z[0];
  const double u2 = theta + z[1];
  const double u3 = theta + z[2];
  return {(4.0 / 3.0) * std::cos(u1) - (1.0 / 3.0) * std::cos(4.0 * u1),
          (4.0 / 3.0) * std::sin(u2) - (1.0 / 3.0) * std::sin(4.0 * u2),
          std::sin(0.8 * wrap_two_pi(u3))};
}

void apply_map(const ObservationMap& map, const Eigen::VectorXd& z, Eigen::Ref<Eigen::VectorXd> out) {
  if (z.size() != map_input_dim(map)) fail(ErrorCode::ShapeMismatch, "map input has wrong dimension");
  if (const auto* p = std::get_if<PolynomialView>(&map)) {
    check_polynomial(*p);
    if (p->singular_at(z)) fail(ErrorCode::SingularMap, "zero base under a negative exponent");
    for (Eigen::Index k = 0; k < p->outputs(); ++k) {
      double acc = 0.0;
      for (Eigen::Index q = 0; q < p->inputs(); ++q) {
        acc += p->coefficients(k, q) * ipow(z(q), p->exponents(k, q));
      }
      out(k) = acc;
    }
  } else if (std::holds_alternative<HelixMap>(map)) {
    out = generate_helix(z(0));
  } else {
    out = generate_flower_view(z(0), std::get<FlowerView>(map).phases);
  }
}

Eigen::VectorXd apply_map(const ObservationMap& map, const Eigen::VectorXd& z) {
  Eigen::VectorXd out(map_output_dim(map));
  apply_map(map, z, out);
  return out;
}

Eigen::VectorXd apply_polynomial_view(const Eigen::VectorXd& theta, double psi,
                                      const PolynomialView& map) {
  Eigen::VectorXd z(theta.size() + 1);
  z << theta, psi;
  return apply_map(ObservationMap{map}, z);
}

Eigen::MatrixXd map_jacobian(const ObservationMap& map, const Eigen::VectorXd& z) {
  if (z.size() != map_input_dim(map)) fail(ErrorCode::ShapeMismatch, "map input has wrong dimension");
  if (const auto* p = std::get_if<PolynomialView>(&map)) {
    check_polynomial(*p);
    if (p->singular_at(z)) fail(ErrorCode::SingularMap, "zero base under a negative exponent");
    Eigen::MatrixXd j(p->outputs(), p->inputs());
    for (Eigen::Index k = 0; k < p->outputs(); ++k) {
      for (Eigen::Index q = 0; q < p->inputs(); ++q) {
        const int b = p->exponents(k, q);
        j(k, q) = p->coefficients(k, q) * b * ipow(z(q), b - 1);
      }
    }
    return j;
  }
  if (std::holds_alternative<HelixMap>(map)) return helix_derivative(z(0));
  const auto& ph = std::get<FlowerView>(map).phases;
  const double u1 = z(0) + ph[0];
  const double u2 = z(0) + ph[1];
  const double u3 = wrap_two_pi(z(0) + ph[2]);
  Eigen::MatrixXd j(3, 1);
  j << -(4.0 / 3.0) * std::sin(u1) + (4.0 / 3.0) * std::sin(4.0 * u1),
      (4.0 / 3.0) * std::cos(u2) - (4.0 / 3.0) * std::cos(4.0 * u2), 0.8 * std::cos(0.8 * u3);
  return j;
}

void simulate_cloud(const Eigen::VectorXd& state, const ObservationMap& map, std::size_t n_c,
                    double dt, std::uint64_t seed, const std::vector<Interval>& reflect,
                    const CloudSink& sink) {
  if (!(dt >= 0.0) || !std::isfinite(dt)) fail(ErrorCode::InvalidArgument, "dt must be >= 0");
  if (state.size() != map_input_dim(map)) fail(ErrorCode::ShapeMismatch, "state has wrong dimension");
  if (!reflect.empty() && static_cast<Eigen::Index>(reflect.size()) != state.size()) {
    fail(ErrorCode::ShapeMismatch, "one reflect interval is required per coordinate");
  }
  Rng rng(seed);
  std::normal_distribution<double> normal;
  const double sqrt_dt = std::sqrt(dt);
  Eigen::VectorXd z(state.size());
  Eigen::VectorXd x(map_output_dim(map));
  for (std::size_t s = 0; s < n_c; ++s) {
    for (Eigen::Index r = 0; r < state.size(); ++r) {
      const double next = state(r) + sqrt_dt * normal(rng);
      z(r) = reflect.empty() ? next : reflect_into(next, reflect[static_cast<std::size_t>(r)]);
    }
    apply_map(map, z, x);
    sink(x);
  }
}

PointCloud sample_point_cloud(const Eigen::VectorXd& state, const ObservationMap& map,
                              std::size_t n_c, double dt, std::uint64_t seed,
                              const std::vector<Interval>& reflect, std::size_t center_index) {
  if (n_c < 2) fail(ErrorCode::InsufficientSamples, "a point cloud needs at least 2 points");
  PointCloud cloud;
  cloud.center_index = center_index;
  cloud.dt = dt;
  cloud.points.resize(static_cast<Eigen::Index>(n_c), map_output_dim(map));
  Eigen::Index row = 0;
  simulate_cloud(state, map, n_c, dt, seed, reflect,
                 [&](const Eigen::VectorXd& x) { cloud.points.row(row++) = x.transpose(); });
  return cloud;
}

Eigen::MatrixXd sample_uniform_box(std::size_t n, const std::vector<Interval>& box, Rng& rng) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(box.size()));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (std::size_t r = 0; r < box.size(); ++r) {
      out(i, static_cast<Eigen::Index>(r)) = box[r].lo + (box[r].hi - box[r].lo) * unit(rng);
    }
  }
  return out;
}

BrownianConsensus make_brownian_consensus(std::size_t n, std::size_t zeta, std::uint64_t seed,
                                          CenterSampler sampler, double trajectory_dt) {
  if (n == 0 || zeta == 0) fail(ErrorCode::InvalidArgument, "n and zeta must be positive");
  const std::vector<Interval> unit_square{{0.0, 1.0}, {0.0, 1.0}};

  // Separate streams keep theta and the first views identical across zeta.
  Eigen::MatrixXd theta;
  if (sampler == CenterSampler::Uniform) {
    Rng rng(derive_seed(seed, 2));
    theta = sample_uniform_box(n, unit_square, rng);
  } else {
    ItoProcessSpec spec{2, {}, trajectory_dt, unit_square, derive_seed(seed, 2)};
    theta = simulate_trajectory(spec, n, Eigen::Vector2d(0.5, 0.5));
  }

  BrownianConsensus out{MultiViewDataset({Eigen::MatrixXd::Zero(1, 1)}), Eigen::MatrixXd(n, zeta), {}};
  std::vector<ViewMatrix> views;
  Eigen::VectorXd z(3);
  for (std::size_t l = 0; l < zeta; ++l) {
    Rng map_rng(derive_seed(seed, 1, l));
    out.maps.push_back(PolynomialView::random(map_rng));
    Rng psi_rng(derive_seed(seed, 3, l));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ViewMatrix view(static_cast<Eigen::Index>(n), 3);
    for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
      double psi = unit(psi_rng);
      z << theta(i, 0), theta(i, 1), psi;
      while (out.maps.back().singular_at(z)) {
        psi = unit(psi_rng);
        z(2) = psi;
        if (theta(i, 0) == 0.0 || theta(i, 1) == 0.0) {
          // A zero consensus coordinate cannot be fixed per view; nudge it once.
          Rng fix(derive_seed(seed, 4, static_cast<std::uint64_t>(i)));
          theta(i, 0) = theta(i, 0) == 0.0 ? unit(fix) : theta(i, 0);
          theta(i, 1) = theta(i, 1) == 0.0 ? unit(fix) : theta(i, 1);
          z << theta(i, 0), theta(i, 1), psi;
        }
      }
      out.psi(i, static_cast<Eigen::Index>(l)) = psi;
      view.row(i) = apply_map(ObservationMap{out.maps.back()}, z).transpose();
    }
    views.push_back(std::move(view));
  }
  out.dataset = MultiViewDataset(std::move(views), theta);
  return out;
}

MultiViewDataset make_helix_dataset(std::size_t n, std::uint64_t seed) {
  if (n == 0) fail(ErrorCode::InvalidArgument, "n must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  Eigen::MatrixXd theta(static_cast<Eigen::Index>(n), 1);
  ViewMatrix view(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < theta.rows(); ++i) {
    theta(i, 0) = angle(rng);
    view.row(i) = generate_helix(theta(i, 0)).transpose();
  }
  return MultiViewDataset({std::move(view)}, std::move(theta));
}

FlowerData make_flower_dataset(std::size_t n, std::size_t zeta, std::uint64_t seed) {
  if (n == 0 || zeta == 0) fail(ErrorCode::InvalidArgument, "n and zeta must be positive");
  Rng rng(seed);
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  Eigen::MatrixXd theta(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < theta.rows(); ++i) theta(i, 0) = angle(rng);
  FlowerData out{MultiViewDataset({Eigen::MatrixXd::Zero(1, 1)}), {}};
  std::vector<ViewMatrix> views;
  for (std::size_t l = 0; l < zeta; ++l) {
    FlowerView fv{{angle(rng), angle(rng), angle(rng)}};
    ViewMatrix view(static_cast<Eigen::Index>(n), 3);
    for (Eigen::Index i = 0; i < theta.rows(); ++i) {
      view.row(i) = generate_flower_view(theta(i, 0), fv.phases).transpose();
    }
    out.views.push_back(fv);
    views.push_back(std::move(view));
  }
  out.dataset = MultiViewDataset(std::move(views), std::move(theta));
  return out;
}

}  // namespace mvk
