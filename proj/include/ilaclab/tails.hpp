#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ilaclab/geometry.hpp"
#include "ilaclab/lattice.hpp"
#include "ilaclab/spectral.hpp"

namespace ilac {

/// Window shape around the edge E.
///   TwoSided: (E - delta, E + delta)
///   Right:    [E, E + delta)
///   Left:     (E - delta, E]
/// On an IlacCurve the windows are read off the distribution function:
/// A(E + delta) - A(E - delta), A(E + delta) - A(E) and A(E) - A(E - delta).
enum class TailSide { TwoSided, Right, Left };

std::string to_string(TailSide s);
TailSide parse_tail_side(const std::string& text);

struct TailSample {
  double delta = 0.0;
  double mass = 0.0;
};

struct TailProfile {
  double edge = 0.0;
  TailSide side = TailSide::TwoSided;
  /// delta strictly decreasing.
  std::vector<TailSample> samples;
};

/// Throws InvalidArgument unless the grid is positive and strictly decreasing.
void validate_delta_grid(const std::vector<double>& deltas);

TailProfile tail_profile(const EmpiricalMeasure1D& measure, double edge, const std::vector<double>& deltas,
                         TailSide side = TailSide::TwoSided);
TailProfile tail_profile(const IlacCurve& curve, double edge, const std::vector<double>& deltas,
                         TailSide side = TailSide::TwoSided);

/// Eight geometric steps from 0.5 down to 0.05 times `bandwidth`.
std::vector<double> default_delta_grid(double bandwidth);

struct LifshitzFit {
  double alpha = 0.0;     // slope of log(-log m) against log(1/delta)
  double constant = 0.0;  // C = exp(intercept)
  double r_squared = 0.0;
  std::size_t points_used = 0;
  bool valid = false;
  /// alpha clearly positive; a flat profile is not a tail.
  bool lifshitz_like = false;
  std::size_t zero_mass_points = 0;
  std::size_t saturated_points = 0;  // m >= 1
  std::string verdict;
  std::vector<std::string> warnings;
};

/// Least squares of log(-log m(delta)) on log(1/delta) over the samples with
/// 0 < m < 1. Fewer than three such samples gives valid = false.
LifshitzFit lifshitz_exponent_fit(const TailProfile& profile);

struct ConvexityProxy {
  /// Slopes of log m against log delta between consecutive positive-mass
  /// samples, in the order of decreasing delta.
  std::vector<double> slopes;
  std::vector<double> second_differences;
  bool satisfied = false;
};

/// Satisfied when the slopes never decrease as delta shrinks and at least
/// three positive-mass samples exist.
ConvexityProxy convexity_proxy(const TailProfile& profile);

struct Theorem21Row {
  std::string edge;  // "lower" or "upper"
  double a = 0.0;
  double lhs = 0.0;  // ILAC increment around E+ + E-
  double plus_wide = 0.0;
  double minus_wide = 0.0;
  double plus_tight = 0.0;
  double minus_tight = 0.0;
  double bound_wide = 0.0;
  double bound_tight = 0.0;
  bool holds = false;       // against the tight bound, tolerance 1e-12
  bool holds_wide = false;  // against the wide bound, tolerance 1e-12
};

/// For each a: lhs = A(E+ + E- + a) - A(E+ + E- - a) and, on the lower edge,
/// the wide windows (E± - 2a, E± + 2a) and tight windows [E±, E± + 2a).
/// The upper edge uses E'± with tight windows (E'± - 2a, E'±]. The + window
/// is always centred on the + edge. Throws InvalidArgument on an empty grid.
std::vector<Theorem21Row> theorem21_verify(const IlacCurve& ilac, const EmpiricalMeasure1D& dos_plus,
                                           const EmpiricalMeasure1D& dos_minus, double e_plus, double e_minus,
                                           double e_plus_top, double e_minus_top, const std::vector<double>& a_grid);

inline constexpr double kInequalityTolerance = 1e-12;

struct ProbedEnergy {
  std::string label;  // e.g. "b1+ + a1-"
  bool internal = false;
  Corner corner;      // (edge of H+ band, edge of H- band)
  double energy = 0.0;
};

struct Theorem31Plan {
  BandStructure plus;
  BandStructure minus;
  std::vector<ProbedEnergy> energies;
  bool internal_probed = false;
  std::string internal_note;
  /// Lower bound mu((a, a + eps)) >= C eps^N at every support edge.
  bool regularity_met = false;
  int regularity_power = 0;
  std::string regularity_note;
};

/// External energies {a1+ + a1-, bN+ + bN-}; with two support intervals and
/// the gap condition met on both sides, also the six internal energies
/// b1+ + a1-, a2+ + a1-, b2+ + a1-, a1+ + a2-, b1+ + b2-, a2+ + a2-.
Theorem31Plan theorem31_plan(const PotentialDistribution& dist, int dimension);

}  // namespace ilac
