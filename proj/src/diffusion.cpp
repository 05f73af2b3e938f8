#include "mvk/diffusion.hpp"

#include "mvk/error.hpp"

#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace mvk {

namespace {

Eigen::VectorXd degrees(const KernelMatrix& k) {
  if (k.values.rows() != k.values.cols() || k.values.rows() == 0) {
    fail(ErrorCode::ShapeMismatch, "kernel must be square and nonempty");
  }
  Eigen::VectorXd d = k.values.rowwise().sum();
  if (!(d.minCoeff() > 0.0)) fail(ErrorCode::InvalidArgument, "kernel has a non-positive row sum");
  return d;
}

/// S = D^-1/2 K D^-1/2, exactly symmetric.
Eigen::MatrixXd conjugate(const KernelMatrix& k, const Eigen::VectorXd& inv_sqrt) {
  const Eigen::Index n = inv_sqrt.size();
  Eigen::MatrixXd s(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) s(i, j) = k.values(i, j) * (inv_sqrt(i) * inv_sqrt(j));
  }
  return s;
}

struct Eigenpairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns match values
};

Eigenpairs full_eigenpairs(const Eigen::MatrixXd& s, Eigen::Index count) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) fail(ErrorCode::SpectralFailure, "symmetric eigensolver did not converge");
  return {es.eigenvalues().tail(count).reverse(), es.eigenvectors().rightCols(count).rowwise().reverse()};
}

/// Leading eigenpairs of a symmetric matrix: Householder tridiagonalization,
/// all eigenvalues of the tridiagonal T, then inverse iteration on T for the
/// requested vectors (orthogonalized against the earlier ones, as clustered
/// eigenvalues near 1 are the norm here). The result is verified against s and
/// recomputed with the dense solver when the residual is not small.
Eigenpairs leading_eigenpairs(const Eigen::MatrixXd& s, Eigen::Index count) {
  const Eigen::Index n = s.rows();
  if (n <= 64 || 4 * count >= n) return full_eigenpairs(s, count);

  const Eigen::Tridiagonalization<Eigen::MatrixXd> tri(s);
  const Eigen::VectorXd diag = tri.diagonal();
  const Eigen::VectorXd sub = tri.subDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> values_only;
  {
    Eigen::VectorXd d = diag;
    Eigen::VectorXd e = sub;
    values_only.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
  }
  if (values_only.info() != Eigen::Success) return full_eigenpairs(s, count);
  const Eigen::VectorXd lambda = values_only.eigenvalues().tail(count).reverse();

  const double norm = std::max(diag.cwiseAbs().maxCoeff() + 2.0 * sub.cwiseAbs().maxCoeff(), 1e-300);
  const double eps = std::numeric_limits<double>::epsilon();
  Eigen::MatrixXd x(n, count);
  for (Eigen::Index c = 0; c < count; ++c) {
    // Shifted tridiagonal T - sigma I; the tiny offset keeps it factorizable.
    const double sigma = lambda(c) + 10.0 * eps * norm;
    Eigen::SparseMatrix<double> shifted(n, n);
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(static_cast<std::size_t>(3 * n));
    for (Eigen::Index i = 0; i < n; ++i) {
      entries.emplace_back(i, i, diag(i) - sigma);
      if (i + 1 < n) {
        entries.emplace_back(i + 1, i, sub(i));
        entries.emplace_back(i, i + 1, sub(i));
      }
    }
    shifted.setFromTriplets(entries.begin(), entries.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(shifted);
    if (lu.info() != Eigen::Success) return full_eigenpairs(s, count);

    Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
    for (Eigen::Index i = 0; i < n; ++i) v(i) += 1e-3 * std::sin(static_cast<double>(i * (c + 1)));
    for (int iter = 0; iter < 6; ++iter) {
      v = lu.solve(v).eval();
      for (Eigen::Index p = 0; p < c; ++p) v -= x.col(p).dot(v) * x.col(p);
      const double len = v.norm();
      if (!(len > 0.0) || !std::isfinite(len)) return full_eigenpairs(s, count);
      v /= len;
    }
    x.col(c) = v;
  }

  Eigenpairs out;
  out.values = lambda;
  out.vectors = tri.matrixQ() * x;
  const Eigen::MatrixXd residual = s * out.vectors - out.vectors * lambda.asDiagonal();
  if (!(residual.cwiseAbs().maxCoeff() <= 1e-9 * norm)) return full_eigenpairs(s, count);
  return out;
}

}  // namespace

Eigen::MatrixXd row_normalize(const KernelMatrix& k) {
  const Eigen::VectorXd d = degrees(k);
  return d.cwiseInverse().asDiagonal() * k.values;
}

Eigen::VectorXd markov_eigenvalues(const KernelMatrix& k, std::size_t count) {
  const Eigen::VectorXd d = degrees(k);
  const Eigen::Index n = d.size();
  const Eigen::Index m = count == 0 ? n : std::min<Eigen::Index>(n, static_cast<Eigen::Index>(count));
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(conjugate(k, d.cwiseSqrt().cwiseInverse()),
                                                           Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorCode::SpectralFailure, "symmetric eigensolver did not converge");
  return es.eigenvalues().tail(m).reverse();
}

DiffusionEmbedding diffusion_map(const KernelMatrix& k, int dims, int t, std::size_t eigenvalue_count) {
  const Eigen::VectorXd d = degrees(k);
  const Eigen::Index n = d.size();
  if (dims < 0 || dims >= n) fail(ErrorCode::InvalidArgument, "embedding dimension must be below n");
  if (t < 1) fail(ErrorCode::InvalidArgument, "diffusion time must be positive");

  // At least two eigenvalues so degeneracy of the top one can be detected.
  Eigen::Index count = std::max<Eigen::Index>({static_cast<Eigen::Index>(dims) + 1,
                                               static_cast<Eigen::Index>(eigenvalue_count), 2});
  count = std::min(count, n);
  const Eigen::VectorXd inv_sqrt = d.cwiseSqrt().cwiseInverse();
  const auto eig = leading_eigenpairs(conjugate(k, inv_sqrt), count);

  DiffusionEmbedding out;
  out.diffusion_time = t;
  out.eigenvalues = eig.values;
  out.degenerate = n > 1 && out.eigenvalues(1) >= 1.0 - 1e-12;

  const double volume = d.sum();
  out.eigenvectors.resize(n, dims + 1);
  for (Eigen::Index c = 0; c <= dims; ++c) {
    Eigen::VectorXd psi = eig.vectors.col(c).cwiseProduct(inv_sqrt) * std::sqrt(volume);
    const double scale = psi.cwiseAbs().maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(psi(i)) > 1e-12 * scale) {
        if (psi(i) < 0.0) psi = -psi;
        break;
      }
    }
    out.eigenvectors.col(c) = psi;
  }
  out.coordinates.resize(n, dims);
  for (Eigen::Index c = 0; c < dims; ++c) {
    out.coordinates.col(c) = std::pow(out.eigenvalues(c + 1), t) * out.eigenvectors.col(c + 1);
  }
  return out;
}

std::vector<double> spectral_lines(const std::vector<double>& eigenvalues, double epsilon) {
  if (!(epsilon > 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be positive");
  std::vector<double> out;
  out.reserve(eigenvalues.size());
  for (double lambda : eigenvalues) {
    if (!(lambda > 0.0)) {
      fail(ErrorCode::NonPositiveEigenvalue, "eigenvalue " + std::to_string(lambda) + " is not positive");
    }
    // + 0.0 turns the -0 of lambda == 1 into 0.
    out.push_back(-2.0 * std::log(lambda) / (std::numbers::pi * std::numbers::pi * epsilon) + 0.0);
  }
  return out;
}

double spectral_epsilon(double epsilon, KernelConvention convention) {
  return convention_factor(convention) * epsilon / 2.0;
}

}  // namespace mvk
