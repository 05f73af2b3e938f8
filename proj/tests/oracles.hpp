#pragma once

// Independent reference computations used as test oracles. They deliberately
// avoid the library's own code paths (dense inverses instead of Cholesky or
// eigen-thresholding, nonsymmetric eigensolvers, power iteration, counting).

#include "mvk/multiview.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

namespace oracle {

/// Random SPD matrix Q diag(lambda) Q^T with eigenvalues in [lo, hi].
inline Eigen::MatrixXd random_spd(int m, std::mt19937_64& rng, double lo = 0.5, double hi = 5.0) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::MatrixXd a(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) a(i, j) = g(rng);
  }
  const Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  const Eigen::MatrixXd q = qr.householderQ();
  Eigen::VectorXd lambda(m);
  for (int i = 0; i < m; ++i) lambda(i) = u(rng);
  Eigen::MatrixXd c = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (c + c.transpose());
}

/// 0.5 d^T (Ci^-1 + Cj^-1) d with dense LU inverses.
inline double mahalanobis(const Eigen::VectorXd& d, const Eigen::MatrixXd& ci, const Eigen::MatrixXd& cj) {
  return 0.5 * d.dot((ci.fullPivLu().inverse() + cj.fullPivLu().inverse()) * d);
}

/// Eigenvalues of D^-1 K from the nonsymmetric solver, sorted descending.
inline std::vector<double> markov_spectrum(const Eigen::MatrixXd& k) {
  const Eigen::VectorXd d = k.rowwise().sum();
  const Eigen::MatrixXd p = d.cwiseInverse().asDiagonal() * k;
  const Eigen::EigenSolver<Eigen::MatrixXd> es(p, false);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i).real());
  std::sort(out.rbegin(), out.rend());
  return out;
}

/// Dominant eigenvalue of a nonnegative matrix by power iteration.
inline double power_iteration(const Eigen::MatrixXd& p, int iterations = 2000) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(p.rows());
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd w = p * v;
    lambda = w.norm() / v.norm();
    v = w / w.norm();
  }
  return lambda;
}

/// Largest count of entries in one of `bins` equal bins of [0, 1] (top edge in
/// the last bin), ties to the larger bin; returns that bin's index.
inline int modal_bin(const std::vector<double>& entries, int bins) {
  std::vector<int> count(static_cast<std::size_t>(bins), 0);
  for (double e : entries) {
    int b = static_cast<int>(std::floor(e * bins));
    b = std::clamp(b, 0, bins - 1);
    ++count[static_cast<std::size_t>(b)];
  }
  int best = 0;
  for (int b = 0; b < bins; ++b) {
    if (count[static_cast<std::size_t>(b)] >= count[static_cast<std::size_t>(best)]) best = b;
  }
  return best;
}

/// Kernel invariants: exact symmetry, unit diagonal, entries in (0, 1], rows
/// of D^-1 K summing to 1 within 1e-12, top Markov eigenvalue 1 within 1e-10.
/// Returns "" when all hold.
inline std::string kernel_invariants(const Eigen::MatrixXd& k) {
  const Eigen::Index n = k.rows();
  if (k.cols() != n) return "not square";
  for (Eigen::Index i = 0; i < n; ++i) {
    if (k(i, i) != 1.0) return "diagonal entry " + std::to_string(i) + " is not 1";
    for (Eigen::Index j = 0; j < n; ++j) {
      if (k(i, j) != k(j, i)) return "asymmetric at " + std::to_string(i) + "," + std::to_string(j);
      if (!(k(i, j) > 0.0) || !(k(i, j) <= 1.0)) return "entry out of (0,1]";
    }
  }
  const Eigen::VectorXd d = k.rowwise().sum();
  const Eigen::MatrixXd p = d.cwiseInverse().asDiagonal() * k;
  const double worst = (p.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (worst > 1e-12) return "row sum error " + std::to_string(worst);
  // P is similar to S = D^-1/2 K D^-1/2. With K entrywise positive, the
  // positive eigenvector of S belongs to its spectral radius (Perron), so the
  // Rayleigh quotient and residual at v = sqrt(d) certify lambda_0.
  const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd sym = s.asDiagonal() * k * s.asDiagonal();
  Eigen::VectorXd v = d.cwiseSqrt();
  v /= v.norm();
  const Eigen::VectorXd sv = sym * v;
  const double lambda0 = v.dot(sv);
  if (std::abs(lambda0 - 1.0) > 1e-10 || (sv - lambda0 * v).norm() > 1e-10) {
    return "top eigenvalue " + std::to_string(lambda0);
  }
  return "";
}

}  // namespace oracle
