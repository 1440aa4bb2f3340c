#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ilaclab/lattice.hpp"
#include "ilaclab/matrix.hpp"
#include "ilaclab/spectral.hpp"

namespace ilac {

/// The torus (Z/NZ)^d acting on l2 of itself by cyclic shifts.
///   (U_n f)(x) = f(x - n),   (T_n w)(x) = w(x + n),   P = |delta_0><delta_0|.
/// Sites use the row-major order of a periodic BoxSpec of side N.
class TorusSpace {
 public:
  /// Throws InvalidArgument unless 1 <= d <= 3, N >= 3 and N^d <= 4096.
  TorusSpace(int dimension, int modulus);

  int dimension() const noexcept { return box_.dimension; }
  int modulus() const noexcept { return box_.side_length; }
  std::size_t size() const noexcept { return size_; }
  const BoxSpec& box() const noexcept { return box_; }

  /// Site index of x + n (coordinatewise mod N).
  std::size_t translate(std::size_t x, std::size_t n) const;
  std::size_t negate(std::size_t n) const;

  Matrix shift(std::size_t n) const;               // U_n
  Matrix projection() const;                       // P
  Matrix projection_conjugated(std::size_t n) const;  // P_n = U_n^* P U_n
  Matrix projection_tilde(std::size_t n) const;       // P~_n = U_n P U_n^*

  /// max |sum_n P_n - I| and max |sum_n P~_n - I|; exactly zero.
  double partition_of_unity_error() const;
  /// max over (m, n) of |U_{m+n} - U_m U_n| plus |U_0 - I|; exactly zero.
  double group_law_error() const;

  std::vector<double> shift_potential(const std::vector<double>& omega, std::size_t n) const;
  /// U_n^* A U_n.
  Matrix conjugate(const Matrix& a, std::size_t n) const;

  const Matrix& laplacian() const noexcept { return laplacian_; }

 private:
  BoxSpec box_;
  std::size_t size_ = 0;
  Matrix laplacian_;
};

enum class BoundedFunction { Exp, Cos, Lorentzian, Tanh };

std::string to_string(BoundedFunction f);
double apply(BoundedFunction f, double parameter, double x);

/// How a covariant family A_w is built from the base potential w.
struct Recipe {
  enum class Kind {
    Identity,
    Laplacian,
    Multiplication,      // diag(sum_k coefficients[k] w^k)
    FunctionOfH,         // f(H+-) with H+- = Laplacian +- diag(w)
    SpectralProjection,  // 1_I(H+-)
    Product,             // factors[0] * factors[1] * ...
    Gram,                // M^T M with M = factors[0]
    Fixed,               // a matrix independent of w
  };

  Kind kind = Kind::Identity;
  std::vector<double> coefficients;
  BoundedFunction function = BoundedFunction::Exp;
  double parameter = 1.0;
  Sign sign = Sign::Plus;
  Interval interval;
  std::vector<Recipe> factors;
  Matrix fixed;

  static Recipe identity();
  static Recipe laplacian();
  static Recipe multiplication(std::vector<double> coefficients);
  static Recipe function_of_h(BoundedFunction f, double parameter, Sign sign);
  static Recipe spectral_projection(Interval interval, Sign sign);
  static Recipe product(std::vector<Recipe> factors);
  static Recipe gram(Recipe factor);
  static Recipe fixed_matrix(Matrix m);

  std::string describe() const;
  /// Realizations are positive semidefinite by construction.
  bool positive() const;
};

Matrix realize(const Recipe& recipe, const TorusSpace& torus, const std::vector<double>& omega);

/// max |A_{T_n w} - U_n^* A_w U_n| over the given shifts.
double equivariance_error(const Recipe& recipe, const TorusSpace& torus, const std::vector<double>& omega,
                          const std::vector<std::size_t>& shifts);

/// Throws NotCovariant when the error exceeds 1e-12 * max(1, max|A_w|).
void require_covariant(const Recipe& recipe, const TorusSpace& torus, const std::vector<double>& omega,
                       const std::vector<std::size_t>& shifts);

/// (1/N^d) sum_n Tr(P A1_{T_n w} A2_{T_n w} ... P), summed in shift order.
double orbit_expectation(const std::vector<Recipe>& factors, const TorusSpace& torus,
                         const std::vector<double>& omega);

/// (1/N^d) Tr(A1_w A2_w ...) from a single realization.
double trace_per_volume(const std::vector<Recipe>& factors, const TorusSpace& torus,
                        const std::vector<double>& omega);

struct IdentityCheck {
  std::string identity;
  double lhs = 0.0;
  double rhs = 0.0;
  double diff = 0.0;
  bool pass = false;
};

inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kPositivityTolerance = 1e-12;

/// E Tr(P A B P) = E Tr(P B A P). Throws NotCovariant when either family fails
/// the equivariance check on two shifts.
IdentityCheck prop1_identity_check(const Recipe& a, const Recipe& b, const TorusSpace& torus,
                                   const std::vector<double>& omega);

struct Cor2Report {
  IdentityCheck cyclic;      // E Tr(P A B C P) = E Tr(P C A B P)
  double positivity_value = 0.0;  // E Tr(P A B P) for the positive pair (A, B)
  bool positivity_applicable = false;
  bool positivity_pass = true;
};

Cor2Report cor2_checks(const Recipe& a, const Recipe& b, const Recipe& c, const TorusSpace& torus,
                       const std::vector<double>& omega);

/// orbit_expectation(A, B) against trace_per_volume(A, B).
IdentityCheck orbit_consistency_check(const Recipe& a, const Recipe& b, const TorusSpace& torus,
                                      const std::vector<double>& omega);

/// Random base potential, uniform in [lo, hi], from a counter stream.
std::vector<double> random_potential(const TorusSpace& torus, std::uint64_t key, double lo = 0.0, double hi = 1.0);

/// A random covariant recipe. `salt` selects the stream position; spectral
/// projections are drawn for every fourth salt so each batch contains them.
Recipe random_recipe(std::uint64_t key, std::uint64_t salt, bool force_positive = false);

}  // namespace ilac
