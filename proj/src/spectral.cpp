#include "ilaclab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

#include "ilaclab/error.hpp"

namespace ilac {

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::CountPerVolume: return "count_per_volume";
    case Estimator::LocalAtSite: return "local_at_site";
    case Estimator::Marginal: return "marginal";
  }
  return "unknown";
}

namespace {

bool atom_less(const Atom1D& a, const Atom1D& b) {
  return std::tie(a.position, a.weight) < std::tie(b.position, b.weight);
}

bool atom2_less(const Atom2D& a, const Atom2D& b) {
  return std::tie(a.plus, a.minus, a.weight) < std::tie(b.plus, b.minus, b.weight);
}

// Index range [first, last) of sorted keys lying in iv.
template <typename It, typename Key>
std::pair<It, It> interval_range(It begin, It end, const Interval& iv, Key key) {
  auto lower = iv.lo_closed
                   ? std::partition_point(begin, end, [&](const auto& x) { return key(x) < iv.lo; })
                   : std::partition_point(begin, end, [&](const auto& x) { return key(x) <= iv.lo; });
  auto upper = iv.hi_closed
                   ? std::partition_point(lower, end, [&](const auto& x) { return key(x) <= iv.hi; })
                   : std::partition_point(lower, end, [&](const auto& x) { return key(x) < iv.hi; });
  return {lower, upper};
}

}  // namespace

// ---------------------------------------------------------------------------

EmpiricalMeasure1D::EmpiricalMeasure1D(std::vector<Atom1D> atoms, Estimator estimator)
    : atoms_(std::move(atoms)), estimator_(estimator) {
  for (const auto& a : atoms_) {
    if (!(a.weight >= 0.0)) throw InvalidArgument("measure weights must be nonnegative");
    if (!std::isfinite(a.position)) throw InvalidArgument("measure positions must be finite");
  }
  if (!std::is_sorted(atoms_.begin(), atoms_.end(), atom_less))
    std::sort(atoms_.begin(), atoms_.end(), atom_less);
  for (const auto& a : atoms_) total_mass_ += a.weight;
}

double EmpiricalMeasure1D::mass(const Interval& iv) const {
  if (iv.empty()) return 0.0;
  auto [first, last] = interval_range(atoms_.begin(), atoms_.end(), iv,
                                      [](const Atom1D& a) { return a.position; });
  double s = 0.0;
  for (auto it = first; it != last; ++it) s += it->weight;
  return s;
}

EmpiricalMeasure2D::EmpiricalMeasure2D(std::vector<Atom2D> atoms) : atoms_(std::move(atoms)) {
  for (const auto& a : atoms_) {
    if (!(a.weight >= 0.0)) throw InvalidArgument("measure weights must be nonnegative");
    if (!std::isfinite(a.plus) || !std::isfinite(a.minus))
      throw InvalidArgument("measure positions must be finite");
  }
  if (!std::is_sorted(atoms_.begin(), atoms_.end(), atom2_less))
    std::sort(atoms_.begin(), atoms_.end(), atom2_less);
  for (const auto& a : atoms_) total_mass_ += a.weight;
}

double EmpiricalMeasure2D::mass(const Interval& a, const Interval& b) const {
  if (a.empty() || b.empty()) return 0.0;
  auto [first, last] = interval_range(atoms_.begin(), atoms_.end(), a,
                                      [](const Atom2D& x) { return x.plus; });
  double s = 0.0;
  for (auto it = first; it != last; ++it)
    if (b.contains(it->minus)) s += it->weight;
  return s;
}

IlacCurve::IlacCurve(std::vector<double> breakpoints, std::vector<double> cumulative)
    : breakpoints_(std::move(breakpoints)), cumulative_(std::move(cumulative)) {
  if (breakpoints_.size() != cumulative_.size())
    throw DimensionMismatch("ILAC breakpoints and masses differ in length");
}

double IlacCurve::at(double energy) const {
  const auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), energy);
  if (it == breakpoints_.begin()) return 0.0;
  return cumulative_[static_cast<std::size_t>(it - breakpoints_.begin()) - 1];
}

// ---------------------------------------------------------------------------

EmpiricalMeasure1D dos_from_eigenvalues(std::span<const double> eigenvalues, const BoxSpec& box) {
  const std::size_t n = box.site_count();
  if (eigenvalues.size() != n)
    throw DimensionMismatch("spectrum has " + std::to_string(eigenvalues.size()) + " values for " +
                            std::to_string(n) + " sites");
  const double w = 1.0 / static_cast<double>(n);
  std::vector<Atom1D> atoms;
  atoms.reserve(n);
  for (double lambda : eigenvalues) atoms.push_back({lambda, w});
  return {std::move(atoms), Estimator::CountPerVolume};
}

EmpiricalMeasure1D dos_estimate(const EigenDecomposition& dec, const BoxSpec& box, Estimator estimator,
                                std::optional<std::size_t> site) {
  if (estimator == Estimator::CountPerVolume) return dos_from_eigenvalues(dec.values(), box);
  if (estimator != Estimator::LocalAtSite) throw InvalidArgument("dos_estimate: unsupported estimator");
  if (dec.size() != box.site_count()) throw DimensionMismatch("dos_estimate: size mismatch");
  if (!dec.has_vectors()) throw InvalidArgument("local DOS needs eigenvectors");
  const std::size_t x0 = site.value_or(box.center_site());
  if (x0 >= dec.size()) throw InvalidArgument("dos_estimate: site outside the box");
  std::vector<Atom1D> atoms;
  atoms.reserve(dec.size());
  for (std::size_t k = 0; k < dec.size(); ++k) {
    const double amp = dec.eigenvector(k)[x0];
    atoms.push_back({dec.values()[k], amp * amp});
  }
  return {std::move(atoms), Estimator::LocalAtSite};
}

EmpiricalMeasure2D rho_estimate(const EigenDecomposition& plus, const EigenDecomposition& minus,
                                const OverlapMatrix& overlaps, const BoxSpec& box) {
  const std::size_t n = box.site_count();
  if (plus.size() != n || minus.size() != n || overlaps.size() != n)
    throw DimensionMismatch("rho_estimate: spectra, overlaps and box disagree in size");
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<Atom2D> atoms;
  atoms.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    auto w = overlaps.row(i);
    for (std::size_t j = 0; j < n; ++j) atoms.push_back({plus.values()[i], minus.values()[j], w[j] * inv});
  }
  return EmpiricalMeasure2D(std::move(atoms));
}

IlacCurve ilac_curve(const EmpiricalMeasure2D& rho) {
  std::vector<Atom1D> sums;
  sums.reserve(rho.size());
  for (const auto& a : rho.atoms()) sums.push_back({a.plus + a.minus, a.weight});
  std::sort(sums.begin(), sums.end(), atom_less);

  std::vector<double> breakpoints;
  std::vector<double> cumulative;
  double running = 0.0;
  for (std::size_t k = 0; k < sums.size(); ++k) {
    running += sums[k].weight;
    if (k + 1 == sums.size() || sums[k + 1].position != sums[k].position) {
      breakpoints.push_back(sums[k].position);
      cumulative.push_back(running);
    }
  }
  return {std::move(breakpoints), std::move(cumulative)};
}

EmpiricalMeasure1D rotated_marginal(const EmpiricalMeasure2D& rho) {
  std::vector<Atom1D> atoms;
  atoms.reserve(rho.size());
  for (const auto& a : rho.atoms()) atoms.push_back({(a.plus + a.minus) / std::numbers::sqrt2, a.weight});
  return {std::move(atoms), Estimator::Marginal};
}

Prop3Report prop3_check(const EmpiricalMeasure2D& rho, const EmpiricalMeasure1D& dos_plus,
                        const EmpiricalMeasure1D& dos_minus, const Interval& a, const Interval& b) {
  if (dos_plus.estimator() != Estimator::CountPerVolume || dos_minus.estimator() != Estimator::CountPerVolume)
    throw EstimatorMismatch("prop3_check needs count-per-volume densities of states");
  Prop3Report r;
  r.lhs = rho.mass(a, b);
  r.rhs_plus = dos_plus.mass(a);
  r.rhs_minus = dos_minus.mass(b);
  r.holds = r.lhs <= std::min(r.rhs_plus, r.rhs_minus) + 1e-12;
  return r;
}

namespace {

std::vector<double> resolve_weights(std::size_t count, std::span<const double> weights) {
  if (count == 0) throw InvalidArgument("merge_measures: nothing to merge");
  if (weights.empty()) return std::vector<double>(count, 1.0 / static_cast<double>(count));
  if (weights.size() != count) throw DimensionMismatch("merge_measures: one weight per measure required");
  for (double w : weights)
    if (!(w >= 0.0)) throw InvalidArgument("merge_measures: weights must be nonnegative");
  return {weights.begin(), weights.end()};
}

}  // namespace

EmpiricalMeasure1D merge_measures(std::span<const EmpiricalMeasure1D> measures, std::span<const double> weights) {
  const auto w = resolve_weights(measures.size(), weights);
  const Estimator est = measures.front().estimator();
  std::size_t total = 0;
  for (const auto& m : measures) {
    if (m.estimator() != est) throw EstimatorMismatch("merge_measures: mixed estimators");
    total += m.size();
  }
  std::vector<Atom1D> pooled;
  pooled.reserve(total);
  for (std::size_t r = 0; r < measures.size(); ++r)
    for (const auto& a : measures[r].atoms()) pooled.push_back({a.position, a.weight * w[r]});
  std::sort(pooled.begin(), pooled.end(), atom_less);
  return {std::move(pooled), est};
}

EmpiricalMeasure2D merge_measures(std::span<const EmpiricalMeasure2D> measures, std::span<const double> weights) {
  const auto w = resolve_weights(measures.size(), weights);
  std::size_t total = 0;
  for (const auto& m : measures) total += m.size();
  std::vector<Atom2D> pooled;
  pooled.reserve(total);
  for (std::size_t r = 0; r < measures.size(); ++r)
    for (const auto& a : measures[r].atoms()) pooled.push_back({a.plus, a.minus, a.weight * w[r]});
  std::sort(pooled.begin(), pooled.end(), atom2_less);
  return EmpiricalMeasure2D(std::move(pooled));
}

std::vector<double> histogram(const EmpiricalMeasure1D& measure, double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw InvalidArgument("histogram needs bins > 0 and hi > lo");
  std::vector<double> cells(bins, 0.0);
  const double h = (hi - lo) / static_cast<double>(bins);
  for (const auto& a : measure.atoms()) {
    if (a.position < lo || a.position >= hi) continue;
    auto k = static_cast<std::size_t>((a.position - lo) / h);
    cells[std::min(k, bins - 1)] += a.weight;
  }
  return cells;
}

}  // namespace ilac
