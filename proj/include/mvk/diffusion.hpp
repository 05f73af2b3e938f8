#pragma once

#include "mvk/multiview.hpp"

#include <Eigen/Dense>

#include <vector>

namespace mvk {

struct DiffusionEmbedding {
  Eigen::VectorXd eigenvalues;  // leading eigenvalues, descending; eigenvalues(0) ~ 1
  Eigen::MatrixXd coordinates;  // n x k, column c = lambda_{c+1}^t psi_{c+1}
  Eigen::MatrixXd eigenvectors; // n x (k+1) right eigenvectors psi_0..psi_k of D^-1 K
  int diffusion_time = 1;
  /// More than one eigenvalue equal to 1: coordinates are not unique.
  bool degenerate = false;
};

/// P = D^-1 K.
Eigen::MatrixXd row_normalize(const KernelMatrix& k);

/// Eigenvectors come from D^-1/2 K D^-1/2 and are mapped back by D^-1/2,
/// scaled so that sum_i pi_i psi(i)^2 = 1 with pi = d / sum(d). Each is
/// signed so that its first nonzero entry is positive.
///
/// Only the leading max(dims + 1, eigenvalue_count) eigenpairs are computed
/// (capped at n).
DiffusionEmbedding diffusion_map(const KernelMatrix& k, int dims, int t = 1,
                                 std::size_t eigenvalue_count = 0);

/// Descending eigenvalues of D^-1 K (all n when count is 0).
Eigen::VectorXd markov_eigenvalues(const KernelMatrix& k, std::size_t count = 0);

/// -2 ln(lambda_i) / (pi^2 eps) for every eigenvalue given.
std::vector<double> spectral_lines(const std::vector<double>& eigenvalues, double epsilon);

/// Width for spectral_lines matching a kernel exp(-d/(c eps)): c * eps / 2.
double spectral_epsilon(double epsilon, KernelConvention convention);

}  // namespace mvk
