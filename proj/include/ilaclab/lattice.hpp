#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ilaclab/matrix.hpp"

namespace ilac {

enum class Boundary { Dirichlet, Periodic };
enum class Sign { Plus, Minus };

std::string to_string(Boundary b);
std::string to_string(Sign s);

inline constexpr std::size_t kDefaultMaxSites = 20000;

/// A finite box {0..L-1}^d of lattice sites, indexed row-major over the
/// coordinates (n_1, ..., n_d) with n_d varying fastest.
struct BoxSpec {
  int dimension = 1;
  int side_length = 2;
  Boundary boundary = Boundary::Dirichlet;
  std::size_t max_sites = kDefaultMaxSites;

  /// Throws InvalidArgument unless 1 <= d <= 3, L >= 1 and L^d <= max_sites.
  void validate() const;

  std::size_t site_count() const;
  std::size_t index(std::span<const int> coords) const;
  std::vector<int> coords(std::size_t index) const;
  /// Site with every coordinate equal to L / 2.
  std::size_t center_site() const;

  friend bool operator==(const BoxSpec&, const BoxSpec&) = default;
};

/// A closed interval [lo, hi]; lo == hi is a point.
struct ClosedInterval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double x) const noexcept { return lo <= x && x <= hi; }
  double width() const noexcept { return hi - lo; }
  friend bool operator==(const ClosedInterval&, const ClosedInterval&) = default;
};

enum class DistributionKind { UniformInterval, Bernoulli, TwoIntervalUniform };

std::string to_string(DistributionKind k);

/// Single-site law of the i.i.d. potential.
///
/// UniformInterval: uniform on [a1, b1]; a1 == b1 requires allow_point_mass.
/// Bernoulli: v1 with probability p, v0 otherwise.
/// TwoIntervalUniform: uniform on [a1, b1] with probability p (by default
///   proportional to length) and uniform on [a2, b2] otherwise; b1 < a2.
struct PotentialDistribution {
  DistributionKind kind = DistributionKind::UniformInterval;
  double a1 = 0.0, b1 = 1.0;
  double a2 = 0.0, b2 = 0.0;
  double v0 = 0.0, v1 = 0.0;
  std::optional<double> p;
  bool allow_point_mass = false;

  static PotentialDistribution uniform(double a, double b);
  static PotentialDistribution bernoulli(double v0, double v1, double p);
  static PotentialDistribution two_interval(double a1, double b1, double a2, double b2,
                                            std::optional<double> p = std::nullopt);

  void validate() const;

  /// support(mu) as sorted, disjoint closed intervals.
  std::vector<ClosedInterval> support() const;

  /// Draw for one site from the stream `key`.
  double sample(std::uint64_t key, std::uint64_t site) const;

  friend bool operator==(const PotentialDistribution&, const PotentialDistribution&) = default;
};

struct DisorderRealization {
  std::uint64_t master_seed = 0;
  std::uint64_t realization_index = 0;
  std::vector<double> values;
};

struct HamiltonianPair {
  Matrix h_plus;
  Matrix h_minus;
  BoxSpec box;
  std::uint64_t master_seed = 0;
  std::uint64_t realization_index = 0;
};

struct BandStructure {
  std::vector<ClosedInterval> bands;
  /// At least two support intervals, each gap wider than the 4d hopping
  /// spread: b_i + 2d < a_{i+1} - 2d for consecutive support intervals.
  bool gap_condition_met = false;

  bool contains(double x) const noexcept;
  double lower_edge() const { return bands.front().lo; }
  double upper_edge() const { return bands.back().hi; }
};

/// Adjacency matrix of the box graph (zero diagonal).
Matrix build_laplacian(const BoxSpec& box);

DisorderRealization sample_potential(const PotentialDistribution& dist, const BoxSpec& box,
                                     std::uint64_t master_seed, std::uint64_t realization_index);

/// h_plus = laplacian + diag(q), h_minus = laplacian - diag(q).
HamiltonianPair assemble_hamiltonians(const Matrix& laplacian, const DisorderRealization& realization,
                                      const BoxSpec& box);

/// The almost-sure spectrum [-2d, 2d] + support(+-mu), overlaps merged.
BandStructure almost_sure_bands(const PotentialDistribution& dist, int dimension, Sign sign);

}  // namespace ilac
