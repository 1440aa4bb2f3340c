#pragma once

// Reference implementations used only by the tests. Each one reaches its
// answer by a route that shares no code with the library routine it checks.

#include <cstddef>
#include <optional>
#include <vector>

#include "ilaclab/eigen.hpp"
#include "ilaclab/geometry.hpp"
#include "ilaclab/matrix.hpp"

namespace oracle {

/// Number of eigenvalues of the symmetric matrix `a` strictly below x, from
/// the inertia of a - x I (Gaussian elimination, symmetric pivots).
std::size_t count_below(const ilac::Matrix& a, double x);

/// All eigenvalues by bisection on count_below, ascending, to absolute
/// accuracy `tol`.
std::vector<double> bisection_eigenvalues(const ilac::Matrix& a, double tol = 1e-13);

/// (1/n) sum over (i, j) with lambda+_i + lambda-_j <= E of w(i, j), evaluated
/// at each energy in `energies` (ascending). Rows are swept with one pointer
/// each over the ascending lambda- list.
std::vector<double> ilac_double_sum(const std::vector<double>& plus, const std::vector<double>& minus,
                                    const ilac::OverlapMatrix& w, const std::vector<double>& energies);

struct CornerVerdict {
  bool is_good = false;
  std::vector<ilac::Corner> points;  // points of the line inside Sigma, when finite
};

/// Walks the line lambda+ + lambda- = c + d through every abscissa where it
/// can enter or leave a rectangle and through the midpoints between them,
/// with exact rational membership tests.
CornerVerdict brute_force_corner(const ilac::RectangleSet& sigma, const ilac::Corner& corner);

/// Samples strip-and-Sigma points on a rational lattice of `steps` per unit
/// of 2a inside each rectangle and returns the first one outside all
/// squares, if any.
std::optional<ilac::Corner> sample_strip_cover(const ilac::RectangleSet& sigma, const ilac::Corner& corner,
                                               const ilac::Rational& a, const std::vector<ilac::Square>& squares,
                                               int steps);

}  // namespace oracle
