#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilaclab/eigen.hpp"
#include "ilaclab/lattice.hpp"
#include "ilaclab/spectral.hpp"
#include "ilaclab/tails.hpp"

namespace ilac {

enum class ExperimentKind { Dos, Ilac, Rho, Corners, Tails, Verify21, Verify31, Covariance };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(const std::string& text);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);
/// Fixed 17 significant digits, for CSV output.
std::string format_csv(double v);

struct DosParams {
  Estimator estimator = Estimator::CountPerVolume;
  /// Site for LocalAtSite; defaults to the box centre.
  std::optional<std::size_t> site;
  double hist_lo = -6.0;
  double hist_hi = 6.0;
  std::size_t hist_bins = 120;
  friend bool operator==(const DosParams&, const DosParams&) = default;
};

struct IlacParams {
  double grid_lo = -8.0;
  double grid_hi = 8.0;
  std::size_t grid_points = 161;
  friend bool operator==(const IlacParams&, const IlacParams&) = default;
};

struct RectangleQuery {
  double plus_lo, plus_hi, minus_lo, minus_hi;  // (lo, hi] on each axis
  friend bool operator==(const RectangleQuery&, const RectangleQuery&) = default;
};

struct RhoParams {
  std::vector<RectangleQuery> rectangles;
  /// Extra rectangles drawn from the seed inside [-6, 6]^2.
  std::size_t random_rectangles = 0;
  /// rho atoms are written only when the merged count stays below this.
  std::size_t atom_limit = 1000000;
  friend bool operator==(const RhoParams&, const RhoParams&) = default;
};

struct CornersParams {
  /// Exact band text ("lo hi; lo hi"); empty means the almost-sure bands.
  std::string bands_plus;
  std::string bands_minus;
  std::vector<std::string> a_grid = {"1/100", "1/10", "1/2"};
  friend bool operator==(const CornersParams&, const CornersParams&) = default;
};

struct TailsParams {
  std::string measure = "dos_plus";  // dos_plus, dos_minus, ilac
  /// Defaults to the lower edge of the chosen measure's bands.
  std::optional<double> edge;
  TailSide side = TailSide::TwoSided;
  /// Empty means default_delta_grid(bandwidth).
  std::vector<double> deltas;
  /// Defaults to the width of the band holding the edge.
  std::optional<double> bandwidth;
  friend bool operator==(const TailsParams&, const TailsParams&) = default;
};

struct Verify21Params {
  std::vector<double> a_grid;  // empty means 0.05, 0.10, ..., 1.00
  std::optional<double> e_plus, e_minus, e_plus_top, e_minus_top;
  friend bool operator==(const Verify21Params&, const Verify21Params&) = default;
};

struct Verify31Params {
  std::vector<double> deltas;  // empty means default_delta_grid(1)
  friend bool operator==(const Verify31Params&, const Verify31Params&) = default;
};

struct CovarianceParams {
  int dimension = 1;
  int modulus = 16;
  std::size_t trials = 50;
  friend bool operator==(const CovarianceParams&, const CovarianceParams&) = default;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Dos;
  std::uint64_t seed = 1;
  std::size_t realizations = 10;
  std::size_t workers = 1;
  std::string out = "out";

  BoxSpec box{1, 100, Boundary::Dirichlet, kDefaultMaxSites};
  PotentialDistribution potential = PotentialDistribution::uniform(0.0, 1.0);
  EigenOptions eigen;

  DosParams dos;
  IlacParams ilac;
  RhoParams rho;
  CornersParams corners;
  TailsParams tails;
  Verify21Params verify21;
  Verify31Params verify31;
  CovarianceParams covariance;

  /// Throws ConfigError describing the first problem found.
  void validate() const;

  static ExperimentConfig parse(const std::string& text);
  static ExperimentConfig load(const std::string& path);
  std::string serialize() const;
  nlohmann::ordered_json to_json() const;

  bool operator==(const ExperimentConfig& other) const;
};

}  // namespace ilac
