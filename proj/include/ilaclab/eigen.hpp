#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ilaclab/matrix.hpp"

namespace ilac {

struct EigenOptions {
  /// Largest tolerated |A(i,j) - A(j,i)| relative to max |A(i,j)|.
  double symmetry_tolerance = 1e-12;
  /// Implicit-shift sweeps allowed per eigenvalue before giving up.
  int max_sweeps = 50;
};

/// Eigenvalues in nondecreasing order with an orthonormal eigenbasis.
///
/// Eigenvectors are stored as the rows of `vectors` so that eigenvector k is
/// the contiguous span `eigenvector(k)`. `eigenvector_columns()` returns the
/// conventional Q with A = Q diag(values) Q^T.
class EigenDecomposition {
 public:
  EigenDecomposition() = default;
  EigenDecomposition(std::vector<double> values, Matrix vectors);

  std::size_t size() const noexcept { return values_.size(); }
  const std::vector<double>& values() const noexcept { return values_; }
  bool has_vectors() const noexcept { return vectors_.rows() == values_.size() && !values_.empty(); }
  std::span<const double> eigenvector(std::size_t k) const { return vectors_.row(k); }
  const Matrix& vector_rows() const noexcept { return vectors_; }
  Matrix eigenvector_columns() const { return transpose(vectors_); }

 private:
  std::vector<double> values_;
  Matrix vectors_;
};

/// Full decomposition: Householder reduction to tridiagonal form, then
/// implicit-shift QL iteration with accumulated rotations.
///
/// Throws InvalidArgument for empty or non-symmetric input and
/// ConvergenceError (carrying the eigenvalue index) when the sweep budget
/// runs out.
EigenDecomposition eig_symmetric(const Matrix& a, const EigenOptions& options = {});

/// Same algorithm without accumulating the eigenbasis.
std::vector<double> eigenvalues_symmetric(const Matrix& a, const EigenOptions& options = {});

/// w(i, j) = <phi_i, psi_j>^2 with phi from `plus` and psi from `minus`.
class OverlapMatrix {
 public:
  explicit OverlapMatrix(Matrix weights) : weights_(std::move(weights)) {}

  std::size_t size() const noexcept { return weights_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return weights_(i, j); }
  std::span<const double> row(std::size_t i) const { return weights_.row(i); }
  const Matrix& weights() const noexcept { return weights_; }

  /// Largest deviation of any row or column sum from 1.
  double stochasticity_error() const;

 private:
  Matrix weights_;
};

OverlapMatrix overlap_matrix(const EigenDecomposition& plus, const EigenDecomposition& minus);

/// max_k ||A v_k - lambda_k v_k||_2.
double max_residual(const Matrix& a, const EigenDecomposition& dec);
/// max |Q^T Q - I|.
double orthogonality_error(const EigenDecomposition& dec);
/// ||A - Q diag(lambda) Q^T||_F.
double reconstruction_error(const Matrix& a, const EigenDecomposition& dec);

}  // namespace ilac
