#include "ilaclab/tails.hpp"

#include <algorithm>
#include <cmath>

#include "ilaclab/error.hpp"

namespace ilac {

std::string to_string(TailSide s) {
  switch (s) {
    case TailSide::TwoSided: return "two_sided";
    case TailSide::Right: return "right";
    case TailSide::Left: return "left";
  }
  return "two_sided";
}

TailSide parse_tail_side(const std::string& text) {
  if (text == "two_sided") return TailSide::TwoSided;
  if (text == "right") return TailSide::Right;
  if (text == "left") return TailSide::Left;
  throw InvalidArgument("unknown tail side '" + text + "' (two_sided, right, left)");
}

void validate_delta_grid(const std::vector<double>& deltas) {
  if (deltas.empty()) throw InvalidArgument("delta grid is empty");
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    if (!(deltas[k] > 0.0) || !std::isfinite(deltas[k])) throw InvalidArgument("delta grid must be positive");
    if (k > 0 && !(deltas[k] < deltas[k - 1])) throw InvalidArgument("delta grid must be strictly decreasing");
  }
}

TailProfile tail_profile(const EmpiricalMeasure1D& measure, double edge, const std::vector<double>& deltas,
                         TailSide side) {
  validate_delta_grid(deltas);
  TailProfile out{edge, side, {}};
  for (double d : deltas) {
    Interval window;
    switch (side) {
      case TailSide::TwoSided: window = Interval::open(edge - d, edge + d); break;
      case TailSide::Right: window = Interval::right_open(edge, edge + d); break;
      case TailSide::Left: window = Interval::half_open(edge - d, edge); break;
    }
    out.samples.push_back({d, measure.mass(window)});
  }
  return out;
}

TailProfile tail_profile(const IlacCurve& curve, double edge, const std::vector<double>& deltas, TailSide side) {
  validate_delta_grid(deltas);
  TailProfile out{edge, side, {}};
  const double center = curve.at(edge);
  for (double d : deltas) {
    double m = 0.0;
    switch (side) {
      case TailSide::TwoSided: m = curve.at(edge + d) - curve.at(edge - d); break;
      case TailSide::Right: m = curve.at(edge + d) - center; break;
      case TailSide::Left: m = center - curve.at(edge - d); break;
    }
    out.samples.push_back({d, std::max(m, 0.0)});
  }
  return out;
}

std::vector<double> default_delta_grid(double bandwidth) {
  if (!(bandwidth > 0.0)) throw InvalidArgument("bandwidth must be positive");
  constexpr int kPoints = 8;
  std::vector<double> grid(kPoints);
  const double ratio = std::pow(0.1, 1.0 / (kPoints - 1));
  for (int k = 0; k < kPoints; ++k) grid[k] = 0.5 * bandwidth * std::pow(ratio, k);
  grid.back() = 0.05 * bandwidth;
  return grid;
}

LifshitzFit lifshitz_exponent_fit(const TailProfile& profile) {
  LifshitzFit fit;
  std::vector<double> xs, ys;
  for (const auto& s : profile.samples) {
    if (s.mass <= 0.0) {
      ++fit.zero_mass_points;
      continue;
    }
    if (s.mass >= 1.0) {
      ++fit.saturated_points;
      fit.warnings.push_back("sample at delta " + std::to_string(s.delta) + " has mass >= 1 and was excluded");
      continue;
    }
    xs.push_back(std::log(1.0 / s.delta));
    ys.push_back(std::log(-std::log(s.mass)));
  }
  fit.points_used = xs.size();
  if (xs.empty() && fit.saturated_points == 0) {
    fit.verdict = "no tail mass resolved";
    return fit;
  }
  if (xs.size() < 3) {
    fit.verdict = "fewer than three usable samples";
    return fit;
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  if (sxx == 0.0) {
    fit.verdict = "all usable samples share one delta";
    return fit;
  }
  fit.alpha = sxy / sxx;
  const double intercept = my - fit.alpha * mx;
  fit.constant = std::exp(intercept);
  double ss_res = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double r = ys[k] - (intercept + fit.alpha * xs[k]);
    ss_res += r * r;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  fit.valid = true;
  fit.lifshitz_like = fit.alpha > 1e-6;
  fit.verdict = fit.lifshitz_like ? "stretched-exponential decay" : "flat profile, not a Lifshitz tail";
  return fit;
}

ConvexityProxy convexity_proxy(const TailProfile& profile) {
  ConvexityProxy out;
  std::vector<double> lx, ly;
  for (const auto& s : profile.samples) {
    if (s.mass <= 0.0) continue;
    lx.push_back(std::log(s.delta));
    ly.push_back(std::log(s.mass));
  }
  for (std::size_t k = 0; k + 1 < lx.size(); ++k)
    out.slopes.push_back((ly[k + 1] - ly[k]) / (lx[k + 1] - lx[k]));
  for (std::size_t k = 0; k + 1 < out.slopes.size(); ++k)
    out.second_differences.push_back(out.slopes[k + 1] - out.slopes[k]);
  out.satisfied = lx.size() >= 3 && std::all_of(out.second_differences.begin(), out.second_differences.end(),
                                                [](double v) { return v >= 0.0; });
  return out;
}

std::vector<Theorem21Row> theorem21_verify(const IlacCurve& ilac, const EmpiricalMeasure1D& dos_plus,
                                           const EmpiricalMeasure1D& dos_minus, double e_plus, double e_minus,
                                           double e_plus_top, double e_minus_top, const std::vector<double>& a_grid) {
  if (a_grid.empty()) throw InvalidArgument("theorem21_verify needs a nonempty a grid");
  for (double a : a_grid)
    if (!(a > 0.0)) throw InvalidArgument("a grid values must be positive");

  auto finish = [](Theorem21Row& row) {
    row.bound_wide = std::min(row.plus_wide, row.minus_wide);
    row.bound_tight = std::min(row.plus_tight, row.minus_tight);
    row.holds = row.lhs <= row.bound_tight + kInequalityTolerance;
    row.holds_wide = row.lhs <= row.bound_wide + kInequalityTolerance;
  };

  std::vector<Theorem21Row> rows;
  for (double a : a_grid) {
    Theorem21Row lower;
    lower.edge = "lower";
    lower.a = a;
    lower.lhs = ilac.increment(e_plus + e_minus, a);
    lower.plus_wide = dos_plus.mass(Interval::open(e_plus - 2.0 * a, e_plus + 2.0 * a));
    lower.minus_wide = dos_minus.mass(Interval::open(e_minus - 2.0 * a, e_minus + 2.0 * a));
    lower.plus_tight = dos_plus.mass(Interval::right_open(e_plus, e_plus + 2.0 * a));
    lower.minus_tight = dos_minus.mass(Interval::right_open(e_minus, e_minus + 2.0 * a));
    finish(lower);
    rows.push_back(lower);
  }
  for (double a : a_grid) {
    Theorem21Row upper;
    upper.edge = "upper";
    upper.a = a;
    upper.lhs = ilac.increment(e_plus_top + e_minus_top, a);
    upper.plus_wide = dos_plus.mass(Interval::open(e_plus_top - 2.0 * a, e_plus_top + 2.0 * a));
    upper.minus_wide = dos_minus.mass(Interval::open(e_minus_top - 2.0 * a, e_minus_top + 2.0 * a));
    upper.plus_tight = dos_plus.mass(Interval::half_open(e_plus_top - 2.0 * a, e_plus_top));
    upper.minus_tight = dos_minus.mass(Interval::half_open(e_minus_top - 2.0 * a, e_minus_top));
    finish(upper);
    rows.push_back(upper);
  }
  return rows;
}

Theorem31Plan theorem31_plan(const PotentialDistribution& dist, int dimension) {
  dist.validate();
  Theorem31Plan plan;
  plan.plus = almost_sure_bands(dist, dimension, Sign::Plus);
  plan.minus = almost_sure_bands(dist, dimension, Sign::Minus);

  const auto& p = plan.plus.bands;
  const auto& m = plan.minus.bands;
  auto probe = [&](std::string label, bool internal, double c, double d) {
    const Corner corner{exact_rational(c), exact_rational(d)};
    plan.energies.push_back({std::move(label), internal, corner, to_double(corner.sum())});
  };
  probe("a1+ + a1-", false, p.front().lo, m.front().lo);
  probe("b" + std::to_string(p.size()) + "+ + b" + std::to_string(m.size()) + "-", false, p.back().hi, m.back().hi);

  if (plan.plus.gap_condition_met && plan.minus.gap_condition_met && p.size() == 2 && m.size() == 2) {
    plan.internal_probed = true;
    probe("b1+ + a1-", true, p[0].hi, m[0].lo);
    probe("a2+ + a1-", true, p[1].lo, m[0].lo);
    probe("b2+ + a1-", true, p[1].hi, m[0].lo);
    probe("a1+ + a2-", true, p[0].lo, m[1].lo);
    probe("b1+ + b2-", true, p[0].hi, m[1].hi);
    probe("a2+ + a2-", true, p[1].lo, m[1].lo);
  } else if (dist.kind != DistributionKind::TwoIntervalUniform) {
    plan.internal_note = "single-interval support: only external edges are probed";
  } else {
    plan.internal_note = "gap condition b1 + 2d < a2 - 2d fails; internal edges skipped";
  }

  switch (dist.kind) {
    case DistributionKind::UniformInterval:
      plan.regularity_met = dist.a1 < dist.b1;
      plan.regularity_power = plan.regularity_met ? 1 : 0;
      plan.regularity_note = plan.regularity_met ? "uniform density: mu((a, a + eps)) >= eps / (b - a)"
                                                 : "point mass: mu((a, a + eps)) = 0";
      break;
    case DistributionKind::TwoIntervalUniform: {
      const bool nondegenerate = dist.a1 < dist.b1 && dist.a2 < dist.b2;
      plan.regularity_met = nondegenerate;
      plan.regularity_power = nondegenerate ? 1 : 0;
      plan.regularity_note = nondegenerate ? "piecewise uniform density: linear lower bound at every edge"
                                           : "a degenerate piece is a point mass";
      break;
    }
    case DistributionKind::Bernoulli:
      plan.regularity_met = false;
      plan.regularity_note = "point masses: mu((v, v + eps)) = 0 for small eps";
      break;
  }
  return plan;
}

}  // namespace ilac
