#include "ilaclab/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ilaclab/error.hpp"
#include "ilaclab/rng.hpp"

namespace ilac {

std::string to_string(Boundary b) { return b == Boundary::Dirichlet ? "dirichlet" : "periodic"; }
std::string to_string(Sign s) { return s == Sign::Plus ? "plus" : "minus"; }

std::string to_string(DistributionKind k) {
  switch (k) {
    case DistributionKind::UniformInterval: return "uniform";
    case DistributionKind::Bernoulli: return "bernoulli";
    case DistributionKind::TwoIntervalUniform: return "two_interval";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// BoxSpec

void BoxSpec::validate() const {
  if (dimension < 1 || dimension > 3)
    throw InvalidArgument("box dimension must be 1, 2 or 3, got " + std::to_string(dimension));
  if (side_length < 1) throw InvalidArgument("box side length must be positive");
  std::size_t count = 1;
  for (int k = 0; k < dimension; ++k) {
    count *= static_cast<std::size_t>(side_length);
    if (count > max_sites)
      throw InvalidArgument("box has more than " + std::to_string(max_sites) + " sites");
  }
}

std::size_t BoxSpec::site_count() const {
  std::size_t count = 1;
  for (int k = 0; k < dimension; ++k) count *= static_cast<std::size_t>(side_length);
  return count;
}

std::size_t BoxSpec::index(std::span<const int> coords) const {
  if (coords.size() != static_cast<std::size_t>(dimension))
    throw DimensionMismatch("coordinate count differs from box dimension");
  std::size_t idx = 0;
  for (int c : coords) {
    if (c < 0 || c >= side_length) throw InvalidArgument("coordinate outside box");
    idx = idx * static_cast<std::size_t>(side_length) + static_cast<std::size_t>(c);
  }
  return idx;
}

std::vector<int> BoxSpec::coords(std::size_t index) const {
  std::vector<int> c(static_cast<std::size_t>(dimension));
  for (int k = dimension - 1; k >= 0; --k) {
    c[static_cast<std::size_t>(k)] = static_cast<int>(index % static_cast<std::size_t>(side_length));
    index /= static_cast<std::size_t>(side_length);
  }
  return c;
}

std::size_t BoxSpec::center_site() const {
  std::vector<int> c(static_cast<std::size_t>(dimension), side_length / 2);
  return index(c);
}

// ---------------------------------------------------------------------------
// PotentialDistribution

PotentialDistribution PotentialDistribution::uniform(double a, double b) {
  PotentialDistribution d;
  d.kind = DistributionKind::UniformInterval;
  d.a1 = a;
  d.b1 = b;
  d.allow_point_mass = (a == b);
  return d;
}

PotentialDistribution PotentialDistribution::bernoulli(double v0, double v1, double p) {
  PotentialDistribution d;
  d.kind = DistributionKind::Bernoulli;
  d.v0 = v0;
  d.v1 = v1;
  d.p = p;
  return d;
}

PotentialDistribution PotentialDistribution::two_interval(double a1, double b1, double a2, double b2,
                                                          std::optional<double> p) {
  PotentialDistribution d;
  d.kind = DistributionKind::TwoIntervalUniform;
  d.a1 = a1;
  d.b1 = b1;
  d.a2 = a2;
  d.b2 = b2;
  d.p = p;
  return d;
}

namespace {

void require_finite(double x, const char* what) {
  if (!std::isfinite(x)) throw InvalidArgument(std::string("non-finite distribution parameter ") + what);
}

void require_probability(const std::optional<double>& p) {
  if (p && !(*p >= 0.0 && *p <= 1.0)) throw InvalidArgument("probability must lie in [0, 1]");
}

// Probability of the first interval of a two-interval law.
double first_weight(const PotentialDistribution& d) {
  if (d.p) return *d.p;
  const double w1 = d.b1 - d.a1;
  const double w2 = d.b2 - d.a2;
  if (w1 + w2 == 0.0) return 0.5;
  return w1 / (w1 + w2);
}

}  // namespace

void PotentialDistribution::validate() const {
  switch (kind) {
    case DistributionKind::UniformInterval:
      require_finite(a1, "a1");
      require_finite(b1, "b1");
      if (a1 > b1) throw InvalidArgument("uniform interval needs a1 <= b1");
      if (a1 == b1 && !allow_point_mass)
        throw InvalidArgument("degenerate uniform interval must be flagged as a point mass");
      break;
    case DistributionKind::Bernoulli:
      require_finite(v0, "v0");
      require_finite(v1, "v1");
      if (!p) throw InvalidArgument("bernoulli distribution needs p");
      require_probability(p);
      break;
    case DistributionKind::TwoIntervalUniform:
      require_finite(a1, "a1");
      require_finite(b1, "b1");
      require_finite(a2, "a2");
      require_finite(b2, "b2");
      require_probability(p);
      if (a1 > b1 || a2 > b2) throw InvalidArgument("two-interval law needs a_i <= b_i");
      if (!(b1 < a2)) throw InvalidArgument("two-interval law needs b1 < a2");
      if ((a1 == b1 || a2 == b2) && !allow_point_mass)
        throw InvalidArgument("degenerate interval must be flagged as a point mass");
      break;
  }
}

std::vector<ClosedInterval> PotentialDistribution::support() const {
  validate();
  switch (kind) {
    case DistributionKind::UniformInterval:
      return {{a1, b1}};
    case DistributionKind::Bernoulli: {
      const double prob = *p;
      if (prob == 0.0 || v0 == v1) return {{v0, v0}};
      if (prob == 1.0) return {{v1, v1}};
      const double lo = std::min(v0, v1);
      const double hi = std::max(v0, v1);
      return {{lo, lo}, {hi, hi}};
    }
    case DistributionKind::TwoIntervalUniform: {
      const double w = first_weight(*this);
      if (w == 1.0) return {{a1, b1}};
      if (w == 0.0) return {{a2, b2}};
      return {{a1, b1}, {a2, b2}};
    }
  }
  return {};
}

double PotentialDistribution::sample(std::uint64_t key, std::uint64_t site) const {
  const double u0 = draw_unit(key, 2 * site);
  switch (kind) {
    case DistributionKind::UniformInterval:
      return std::min(b1, a1 + (b1 - a1) * u0);
    case DistributionKind::Bernoulli:
      return u0 < *p ? v1 : v0;
    case DistributionKind::TwoIntervalUniform: {
      const double u1 = draw_unit(key, 2 * site + 1);
      if (u0 < first_weight(*this)) return std::min(b1, a1 + (b1 - a1) * u1);
      return std::min(b2, a2 + (b2 - a2) * u1);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

bool BandStructure::contains(double x) const noexcept {
  return std::any_of(bands.begin(), bands.end(), [x](const ClosedInterval& b) { return b.contains(x); });
}

Matrix build_laplacian(const BoxSpec& box) {
  box.validate();
  if (box.side_length < 2) throw InvalidArgument("laplacian needs side length >= 2");
  if (box.boundary == Boundary::Periodic && box.side_length == 2)
    throw PeriodicDoubleEdge("periodic box with side length 2 has doubled edges");

  const std::size_t n = box.site_count();
  const auto L = static_cast<std::size_t>(box.side_length);
  Matrix lap(n, n);
  // Stride of axis k in the row-major index.
  std::size_t stride = 1;
  for (int k = box.dimension - 1; k >= 0; --k) {
    for (std::size_t site = 0; site < n; ++site) {
      const std::size_t c = (site / stride) % L;
      if (c + 1 < L) {
        const std::size_t nb = site + stride;
        lap(site, nb) = 1.0;
        lap(nb, site) = 1.0;
      } else if (box.boundary == Boundary::Periodic) {
        const std::size_t nb = site - (L - 1) * stride;
        lap(site, nb) = 1.0;
        lap(nb, site) = 1.0;
      }
    }
    stride *= L;
  }
  return lap;
}

DisorderRealization sample_potential(const PotentialDistribution& dist, const BoxSpec& box,
                                     std::uint64_t master_seed, std::uint64_t realization_index) {
  dist.validate();
  box.validate();
  DisorderRealization r;
  r.master_seed = master_seed;
  r.realization_index = realization_index;
  const std::uint64_t key = realization_key(master_seed, realization_index);
  const std::size_t n = box.site_count();
  r.values.resize(n);
  for (std::size_t site = 0; site < n; ++site) r.values[site] = dist.sample(key, site);
  return r;
}

HamiltonianPair assemble_hamiltonians(const Matrix& laplacian, const DisorderRealization& realization,
                                      const BoxSpec& box) {
  const std::size_t n = realization.values.size();
  if (!laplacian.square() || laplacian.rows() != n)
    throw DimensionMismatch("laplacian is " + std::to_string(laplacian.rows()) + "x" +
                            std::to_string(laplacian.cols()) + " but realization has " +
                            std::to_string(n) + " sites");
  HamiltonianPair pair{laplacian, laplacian, box, realization.master_seed, realization.realization_index};
  for (std::size_t i = 0; i < n; ++i) {
    pair.h_plus(i, i) += realization.values[i];
    pair.h_minus(i, i) -= realization.values[i];
  }
  return pair;
}

BandStructure almost_sure_bands(const PotentialDistribution& dist, int dimension, Sign sign) {
  if (dimension < 1 || dimension > 3) throw InvalidArgument("dimension must be 1, 2 or 3");
  std::vector<ClosedInterval> supp = dist.support();
  if (sign == Sign::Minus) {
    std::reverse(supp.begin(), supp.end());
    for (auto& iv : supp) iv = {-iv.hi, -iv.lo};
  }
  const double spread = 2.0 * dimension;

  BandStructure out;
  out.gap_condition_met = supp.size() >= 2;
  for (std::size_t i = 0; i + 1 < supp.size(); ++i)
    if (!(supp[i].hi + spread < supp[i + 1].lo - spread)) out.gap_condition_met = false;

  for (const auto& iv : supp) {
    ClosedInterval band{iv.lo - spread, iv.hi + spread};
    if (!out.bands.empty() && band.lo <= out.bands.back().hi)
      out.bands.back().hi = std::max(out.bands.back().hi, band.hi);
    else
      out.bands.push_back(band);
  }
  return out;
}

}  // namespace ilac
