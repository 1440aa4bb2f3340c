#include "ilaclab/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ilaclab/error.hpp"

namespace ilac {

EigenDecomposition::EigenDecomposition(std::vector<double> values, Matrix vectors)
    : values_(std::move(values)), vectors_(std::move(vectors)) {}

namespace {

void check_input(const Matrix& a, const EigenOptions& options) {
  if (!a.square()) throw InvalidArgument("eigensolver needs a square matrix");
  if (a.rows() == 0) throw InvalidArgument("eigensolver needs a nonempty matrix");
  const double bound = options.symmetry_tolerance * max_abs(a);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > bound)
        throw InvalidArgument("matrix is not symmetric at (" + std::to_string(i) + ", " +
                              std::to_string(j) + ")");
  for (double v : a.data())
    if (!std::isfinite(v)) throw InvalidArgument("matrix has non-finite entries");
}

// Householder reduction of the lower triangle of z to tridiagonal form.
// On return diag holds the diagonal and off[i] couples i-1 and i (off[0] = 0).
// With want_vectors, z holds the orthogonal transformation (columns).
// Rows that are already tridiagonal are skipped, so banded input stays cheap.
void tridiagonalize(Matrix& z, std::vector<double>& diag, std::vector<double>& off, bool want_vectors) {
  const int n = static_cast<int>(z.rows());
  diag.assign(n, 0.0);
  off.assign(n, 0.0);

  for (int i = n - 1; i > 0; --i) {
    const int l = i - 1;
    double h = 0.0;
    double below = 0.0;
    for (int k = 0; k < l; ++k) below += std::abs(z(i, k));
    if (below == 0.0) {
      off[i] = z(i, l);
    } else {
      const double scale = below + std::abs(z(i, l));
      for (int k = 0; k <= l; ++k) {
        z(i, k) /= scale;
        h += z(i, k) * z(i, k);
      }
      double f = z(i, l);
      double g = f >= 0.0 ? -std::sqrt(h) : std::sqrt(h);
      off[i] = scale * g;
      h -= f * g;
      z(i, l) = f - g;
      f = 0.0;
      for (int j = 0; j <= l; ++j) {
        if (want_vectors) z(j, i) = z(i, j) / h;
        g = 0.0;
        for (int k = 0; k <= j; ++k) g += z(j, k) * z(i, k);
        for (int k = j + 1; k <= l; ++k) g += z(k, j) * z(i, k);
        off[j] = g / h;
        f += off[j] * z(i, j);
      }
      const double hh = f / (h + h);
      for (int j = 0; j <= l; ++j) {
        f = z(i, j);
        g = off[j] - hh * f;
        off[j] = g;
        for (int k = 0; k <= j; ++k) z(j, k) -= f * off[k] + g * z(i, k);
      }
    }
    diag[i] = h;
  }
  diag[0] = 0.0;
  off[0] = 0.0;

  for (int i = 0; i < n; ++i) {
    if (want_vectors) {
      if (diag[i] != 0.0) {
        for (int j = 0; j < i; ++j) {
          double g = 0.0;
          for (int k = 0; k < i; ++k) g += z(i, k) * z(k, j);
          for (int k = 0; k < i; ++k) z(k, j) -= g * z(k, i);
        }
      }
      diag[i] = z(i, i);
      z(i, i) = 1.0;
      for (int j = 0; j < i; ++j) {
        z(j, i) = 0.0;
        z(i, j) = 0.0;
      }
    } else {
      diag[i] = z(i, i);
    }
  }
}

// Implicit-shift QL on the tridiagonal (diag, off). When rows is non-null,
// rotations are applied to its rows, which hold the basis vectors.
void ql_implicit(std::vector<double>& diag, std::vector<double>& off, Matrix* rows, int max_sweeps) {
  const int n = static_cast<int>(diag.size());
  for (int i = 1; i < n; ++i) off[i - 1] = off[i];
  off[n - 1] = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  const std::size_t width = rows ? rows->cols() : 0;
  double norm = 0.0;
  for (int i = 0; i < n; ++i) norm = std::max(norm, std::abs(diag[i]) + std::abs(off[i]));

  for (int l = 0; l < n; ++l) {
    int sweeps = 0;
    int m = l;
    do {
      for (m = l; m < n - 1; ++m) {
        const double dd = std::abs(diag[m]) + std::abs(diag[m + 1]);
        if (std::abs(off[m]) <= eps * dd || std::abs(off[m]) <= eps * norm) break;
      }
      if (m == l) break;
      if (sweeps++ == max_sweeps)
        throw ConvergenceError("eigenvalue " + std::to_string(l) + " did not converge within " +
                                   std::to_string(max_sweeps) + " sweeps",
                               static_cast<std::size_t>(l));
      double g = (diag[l + 1] - diag[l]) / (2.0 * off[l]);
      double r = std::hypot(g, 1.0);
      g = diag[m] - diag[l] + off[l] / (g + std::copysign(r, g));
      double s = 1.0;
      double c = 1.0;
      double p = 0.0;
      int i = m - 1;
      for (; i >= l; --i) {
        double f = s * off[i];
        const double b = c * off[i];
        r = std::hypot(f, g);
        off[i + 1] = r;
        if (r == 0.0) {
          diag[i + 1] -= p;
          off[m] = 0.0;
          break;
        }
        s = f / r;
        c = g / r;
        g = diag[i + 1] - p;
        r = (diag[i] - g) * s + 2.0 * c * b;
        p = s * r;
        diag[i + 1] = g + p;
        g = c * r - b;
        if (rows) {
          double* lo = rows->row(static_cast<std::size_t>(i)).data();
          double* hi = rows->row(static_cast<std::size_t>(i) + 1).data();
          for (std::size_t k = 0; k < width; ++k) {
            f = hi[k];
            hi[k] = s * lo[k] + c * f;
            lo[k] = c * lo[k] - s * f;
          }
        }
      }
      if (r == 0.0 && i >= l) continue;
      diag[l] -= p;
      off[l] = g;
      off[m] = 0.0;
    } while (m != l);
  }
}

std::vector<std::size_t> ascending_order(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return values[x] < values[y]; });
  return order;
}

}  // namespace

EigenDecomposition eig_symmetric(const Matrix& a, const EigenOptions& options) {
  check_input(a, options);
  Matrix z = a;
  std::vector<double> diag, off;
  tridiagonalize(z, diag, off, true);
  Matrix rows = transpose(z);
  ql_implicit(diag, off, &rows, options.max_sweeps);

  const auto order = ascending_order(diag);
  const std::size_t n = diag.size();
  std::vector<double> values(n);
  Matrix sorted(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    values[k] = diag[order[k]];
    std::copy_n(rows.row(order[k]).begin(), n, sorted.row(k).begin());
  }
  return {std::move(values), std::move(sorted)};
}

std::vector<double> eigenvalues_symmetric(const Matrix& a, const EigenOptions& options) {
  check_input(a, options);
  Matrix z = a;
  std::vector<double> diag, off;
  tridiagonalize(z, diag, off, false);
  ql_implicit(diag, off, nullptr, options.max_sweeps);
  std::stable_sort(diag.begin(), diag.end());
  return diag;
}

double OverlapMatrix::stochasticity_error() const {
  const std::size_t n = weights_.rows();
  double worst = 0.0;
  std::vector<double> col(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      s += weights_(i, j);
      col[j] += weights_(i, j);
    }
    worst = std::max(worst, std::abs(s - 1.0));
  }
  for (double c : col) worst = std::max(worst, std::abs(c - 1.0));
  return worst;
}

OverlapMatrix overlap_matrix(const EigenDecomposition& plus, const EigenDecomposition& minus) {
  if (plus.size() != minus.size()) throw DimensionMismatch("overlap_matrix: decompositions differ in size");
  if (!plus.has_vectors() || !minus.has_vectors())
    throw InvalidArgument("overlap_matrix: decompositions carry no eigenvectors");
  const std::size_t n = plus.size();
  // columns(k, j) = component k of psi_j
  const Matrix columns = transpose(minus.vector_rows());
  Matrix w(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto out = w.row(i);
    auto phi = plus.eigenvector(i);
    for (std::size_t k = 0; k < n; ++k) {
      const double c = phi[k];
      const double* src = columns.row(k).data();
      for (std::size_t j = 0; j < n; ++j) out[j] += c * src[j];
    }
    for (double& v : out) v *= v;
  }
  return OverlapMatrix(std::move(w));
}

double max_residual(const Matrix& a, const EigenDecomposition& dec) {
  if (a.rows() != dec.size()) throw DimensionMismatch("max_residual: size mismatch");
  const std::size_t n = dec.size();
  double worst = 0.0;
  std::vector<double> r(n);
  for (std::size_t k = 0; k < n; ++k) {
    auto v = dec.eigenvector(k);
    double norm2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = -dec.values()[k] * v[i];
      auto arow = a.row(i);
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * v[j];
      norm2 += s * s;
    }
    worst = std::max(worst, std::sqrt(norm2));
  }
  return worst;
}

double orthogonality_error(const EigenDecomposition& dec) {
  const Matrix& q = dec.vector_rows();
  const Matrix gram = multiply(q, transpose(q));
  return max_abs_diff(gram, Matrix::identity(dec.size()));
}

double reconstruction_error(const Matrix& a, const EigenDecomposition& dec) {
  const Matrix cols = dec.eigenvector_columns();
  Matrix scaled = cols;
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t k = 0; k < scaled.cols(); ++k) scaled(i, k) *= dec.values()[k];
  return frobenius_norm(subtract(a, multiply(scaled, dec.vector_rows())));
}

}  // namespace ilac
