#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ilaclab/eigen.hpp"
#include "ilaclab/lattice.hpp"

namespace ilac {

/// Interval with independently open or closed ends. The default is the
/// half-open (lo, hi] used by distribution-function differences.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  bool lo_closed = false;
  bool hi_closed = true;

  static Interval half_open(double lo, double hi) { return {lo, hi, false, true}; }
  static Interval open(double lo, double hi) { return {lo, hi, false, false}; }
  static Interval closed(double lo, double hi) { return {lo, hi, true, true}; }
  /// [lo, hi)
  static Interval right_open(double lo, double hi) { return {lo, hi, true, false}; }
  static Interval whole_line() { return {}; }

  bool contains(double x) const noexcept {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
  }
  bool empty() const noexcept { return lo > hi || (lo == hi && !(lo_closed && hi_closed)); }
};

/// Provenance of a 1D measure. Marginal marks measures derived from a
/// correlation measure rather than from one operator's spectrum.
enum class Estimator { CountPerVolume, LocalAtSite, Marginal };

std::string to_string(Estimator e);

struct Atom1D {
  double position = 0.0;
  double weight = 0.0;
  friend bool operator==(const Atom1D&, const Atom1D&) = default;
};

/// Finite weighted point set on the line, kept sorted by (position, weight).
class EmpiricalMeasure1D {
 public:
  EmpiricalMeasure1D() = default;
  EmpiricalMeasure1D(std::vector<Atom1D> atoms, Estimator estimator);

  const std::vector<Atom1D>& atoms() const noexcept { return atoms_; }
  Estimator estimator() const noexcept { return estimator_; }
  double total_mass() const noexcept { return total_mass_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// Sum of weights of atoms inside `iv`, summed in ascending position.
  double mass(const Interval& iv) const;

  friend bool operator==(const EmpiricalMeasure1D&, const EmpiricalMeasure1D&) = default;

 private:
  std::vector<Atom1D> atoms_;
  Estimator estimator_ = Estimator::CountPerVolume;
  double total_mass_ = 0.0;
};

struct Atom2D {
  double plus = 0.0;   // lambda+ coordinate
  double minus = 0.0;  // lambda- coordinate
  double weight = 0.0;
  friend bool operator==(const Atom2D&, const Atom2D&) = default;
};

/// Weighted point set in the (lambda+, lambda-) plane representing the
/// correlation measure, sorted by (plus, minus, weight).
class EmpiricalMeasure2D {
 public:
  EmpiricalMeasure2D() = default;
  explicit EmpiricalMeasure2D(std::vector<Atom2D> atoms);

  const std::vector<Atom2D>& atoms() const noexcept { return atoms_; }
  double total_mass() const noexcept { return total_mass_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// rho(a x b).
  double mass(const Interval& a, const Interval& b) const;

  friend bool operator==(const EmpiricalMeasure2D&, const EmpiricalMeasure2D&) = default;

 private:
  std::vector<Atom2D> atoms_;
  double total_mass_ = 0.0;
};

/// Right-continuous distribution function of lambda+ + lambda- under rho.
class IlacCurve {
 public:
  IlacCurve() = default;
  IlacCurve(std::vector<double> breakpoints, std::vector<double> cumulative);

  /// A(E) = rho({lambda+ + lambda- <= E}).
  double at(double energy) const;
  /// A(E + a) - A(E - a).
  double increment(double energy, double half_width) const { return at(energy + half_width) - at(energy - half_width); }

  const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
  const std::vector<double>& cumulative() const noexcept { return cumulative_; }
  double total_mass() const noexcept { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

 private:
  std::vector<double> breakpoints_;
  std::vector<double> cumulative_;
};

/// LocalAtSite weights each eigenvalue by |phi_k(site)|^2, by default at the
/// box centre.
EmpiricalMeasure1D dos_estimate(const EigenDecomposition& dec, const BoxSpec& box,
                                Estimator estimator = Estimator::CountPerVolume,
                                std::optional<std::size_t> site = std::nullopt);
/// CountPerVolume estimate from eigenvalues alone.
EmpiricalMeasure1D dos_from_eigenvalues(std::span<const double> eigenvalues, const BoxSpec& box);

/// Atoms (lambda+_i, lambda-_j) with weight w_ij / |Lambda|.
EmpiricalMeasure2D rho_estimate(const EigenDecomposition& plus, const EigenDecomposition& minus,
                                const OverlapMatrix& overlaps, const BoxSpec& box);

/// Built directly on the sum coordinate s = lambda+ + lambda-.
IlacCurve ilac_curve(const EmpiricalMeasure2D& rho);

/// nu = rho o T^{-1}( . x R ): the first coordinate of the rotation
/// T(l1, l2) = ((l1 + l2) / sqrt2, (l1 - l2) / sqrt2). A(E) - A(E') equals
/// nu((E' / sqrt2, E / sqrt2]).
EmpiricalMeasure1D rotated_marginal(const EmpiricalMeasure2D& rho);

struct Prop3Report {
  double lhs = 0.0;        // rho(A x B)
  double rhs_plus = 0.0;   // n+(A)
  double rhs_minus = 0.0;  // n-(B)
  bool holds = false;
};

/// rho(A x B) <= min(n+(A), n-(B)); both densities must be CountPerVolume.
Prop3Report prop3_check(const EmpiricalMeasure2D& rho, const EmpiricalMeasure1D& dos_plus,
                        const EmpiricalMeasure1D& dos_minus, const Interval& a, const Interval& b);

/// Convex combination; empty weights means 1/R each. Atoms are pooled and
/// sorted so the result does not depend on the order of the inputs.
EmpiricalMeasure1D merge_measures(std::span<const EmpiricalMeasure1D> measures, std::span<const double> weights = {});
EmpiricalMeasure2D merge_measures(std::span<const EmpiricalMeasure2D> measures, std::span<const double> weights = {});

/// Histogram of a 1D measure over `bins` equal cells of [lo, hi); cell k is
/// [lo + k h, lo + (k+1) h). Returns the mass per cell.
std::vector<double> histogram(const EmpiricalMeasure1D& measure, double lo, double hi, std::size_t bins);

}  // namespace ilac
