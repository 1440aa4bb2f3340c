#include "ilaclab/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <openssl/evp.h>

#include "ilaclab/covariance.hpp"
#include "ilaclab/eigen.hpp"
#include "ilaclab/error.hpp"
#include "ilaclab/geometry.hpp"
#include "ilaclab/parallel.hpp"
#include "ilaclab/rng.hpp"
#include "ilaclab/tails.hpp"

#ifndef ILACLAB_VERSION
#define ILACLAB_VERSION "0.0.0"
#endif

namespace ilac {

using json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int k = 0; k < len; ++k) {
    out.push_back(hex[digest[k] >> 4]);
    out.push_back(hex[digest[k] & 15]);
  }
  return out;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return sha256_hex(buf.str());
}

std::string config_fingerprint(const ExperimentConfig& config) {
  ExperimentConfig c = config;
  c.workers = 1;
  c.out.clear();
  return c.serialize();
}

namespace {

std::string hex64(std::uint64_t v) {
  static constexpr char hex[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int k = 15; k >= 0; --k, v >>= 4) s[static_cast<std::size_t>(k)] = hex[v & 15];
  return s;
}

// ---------------------------------------------------------------------------
// Everything fixed before the realizations run.

struct CornerProbe {
  std::size_t corner = 0;  // index into Plan::good
  std::size_t a = 0;       // index into Plan::a_values
};

struct Plan {
  ExperimentConfig cfg;
  Matrix laplacian;
  BandStructure bands_plus;
  BandStructure bands_minus;
  bool vectors = false;

  std::vector<double> grid;  // ilac

  std::vector<RectangleQuery> rects;  // rho

  ExactBands exact_plus, exact_minus;  // corners
  RectangleSet sigma;
  std::vector<GoodCornerReport> reports;
  std::vector<GoodCornerReport> good;
  std::vector<Rational> a_exact;
  std::vector<double> a_values;
  BandStructure corner_bands_plus, corner_bands_minus;

  double edge = 0.0;  // tails
  double bandwidth = 1.0;
  std::vector<double> deltas;

  double e_plus = 0.0, e_minus = 0.0, e_plus_top = 0.0, e_minus_top = 0.0;  // verify21
  std::vector<double> a21;

  Theorem31Plan plan31;  // verify31
  std::vector<double> deltas31;
};

BandStructure bands_from_exact(const ExactBands& exact) {
  BandStructure out;
  for (const auto& b : exact.bands) out.bands.push_back({to_double(b.lo), to_double(b.hi)});
  return out;
}

Plan make_plan(const ExperimentConfig& cfg) {
  cfg.validate();
  Plan plan;
  plan.cfg = cfg;
  if (cfg.kind == ExperimentKind::Covariance) return plan;

  plan.laplacian = build_laplacian(cfg.box);
  plan.bands_plus = almost_sure_bands(cfg.potential, cfg.box.dimension, Sign::Plus);
  plan.bands_minus = almost_sure_bands(cfg.potential, cfg.box.dimension, Sign::Minus);

  switch (cfg.kind) {
    case ExperimentKind::Dos:
      plan.vectors = cfg.dos.estimator == Estimator::LocalAtSite;
      break;
    case ExperimentKind::Ilac: {
      plan.vectors = true;
      const std::size_t n = cfg.ilac.grid_points;
      for (std::size_t k = 0; k < n; ++k)
        plan.grid.push_back(n == 1 ? cfg.ilac.grid_lo
                                   : cfg.ilac.grid_lo + (cfg.ilac.grid_hi - cfg.ilac.grid_lo) *
                                                            static_cast<double>(k) / static_cast<double>(n - 1));
      break;
    }
    case ExperimentKind::Rho: {
      plan.vectors = true;
      plan.rects = cfg.rho.rectangles;
      CounterRng rng(mix64(cfg.seed ^ 0x726563745f6b6579ULL));
      for (std::size_t k = 0; k < cfg.rho.random_rectangles; ++k) {
        double v[4];
        for (double& x : v) x = rng.uniform(-6.0, 6.0);
        plan.rects.push_back({std::min(v[0], v[1]), std::max(v[0], v[1]), std::min(v[2], v[3]), std::max(v[2], v[3])});
      }
      break;
    }
    case ExperimentKind::Corners: {
      plan.vectors = true;
      plan.exact_plus = cfg.corners.bands_plus.empty() ? ExactBands::from(plan.bands_plus)
                                                       : ExactBands::parse(cfg.corners.bands_plus);
      plan.exact_minus = cfg.corners.bands_minus.empty() ? ExactBands::from(plan.bands_minus)
                                                         : ExactBands::parse(cfg.corners.bands_minus);
      plan.corner_bands_plus = bands_from_exact(plan.exact_plus);
      plan.corner_bands_minus = bands_from_exact(plan.exact_minus);
      plan.sigma = build_sigma(plan.exact_plus, plan.exact_minus);
      for (const auto& c : plan.sigma.corners()) {
        plan.reports.push_back(classify_corner(plan.sigma, c));
        if (plan.reports.back().is_good) plan.good.push_back(plan.reports.back());
      }
      for (const auto& a : cfg.corners.a_grid) {
        plan.a_exact.push_back(parse_rational(a));
        plan.a_values.push_back(to_double(plan.a_exact.back()));
      }
      break;
    }
    case ExperimentKind::Tails: {
      const auto& t = cfg.tails;
      plan.vectors = t.measure == "ilac";
      if (t.measure == "dos_plus") {
        plan.edge = t.edge.value_or(plan.bands_plus.lower_edge());
        plan.bandwidth = t.bandwidth.value_or(plan.bands_plus.bands.front().width());
      } else if (t.measure == "dos_minus") {
        plan.edge = t.edge.value_or(plan.bands_minus.lower_edge());
        plan.bandwidth = t.bandwidth.value_or(plan.bands_minus.bands.front().width());
      } else {
        plan.edge = t.edge.value_or(plan.bands_plus.lower_edge() + plan.bands_minus.lower_edge());
        plan.bandwidth = t.bandwidth.value_or(plan.bands_plus.bands.front().width() +
                                              plan.bands_minus.bands.front().width());
      }
      plan.deltas = t.deltas.empty() ? default_delta_grid(plan.bandwidth) : t.deltas;
      break;
    }
    case ExperimentKind::Verify21: {
      plan.vectors = true;
      const auto& v = cfg.verify21;
      plan.e_plus = v.e_plus.value_or(plan.bands_plus.lower_edge());
      plan.e_minus = v.e_minus.value_or(plan.bands_minus.lower_edge());
      plan.e_plus_top = v.e_plus_top.value_or(plan.bands_plus.upper_edge());
      plan.e_minus_top = v.e_minus_top.value_or(plan.bands_minus.upper_edge());
      plan.a21 = v.a_grid;
      if (plan.a21.empty())
        for (int k = 1; k <= 20; ++k) plan.a21.push_back(0.05 * k);
      break;
    }
    case ExperimentKind::Verify31: {
      plan.vectors = true;
      plan.plan31 = theorem31_plan(cfg.potential, cfg.box.dimension);
      plan.bandwidth = plan.bands_plus.bands.front().width() + plan.bands_minus.bands.front().width();
      plan.deltas31 = cfg.verify31.deltas.empty() ? default_delta_grid(plan.bandwidth) : cfg.verify31.deltas;
      break;
    }
    case ExperimentKind::Covariance: break;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// One realization.

std::size_t count_outside(const std::vector<double>& values, const BandStructure& bands) {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double v) { return !bands.contains(v); }));
}

std::vector<Atom1D> in_band(const EmpiricalMeasure1D& m, const BandStructure& bands) {
  std::vector<Atom1D> out;
  for (const auto& a : m.atoms())
    if (bands.contains(a.position)) out.push_back(a);
  return out;
}

RealizationResult compute_realization(const Plan& plan, std::uint64_t index) {
  const auto& cfg = plan.cfg;
  RealizationResult r;
  r.index = index;

  const auto realization = sample_potential(cfg.potential, cfg.box, cfg.seed, index);
  const auto pair = assemble_hamiltonians(plan.laplacian, realization, cfg.box);

  EigenDecomposition dp, dm;
  std::vector<double> vp, vm;
  try {
    if (plan.vectors) {
      dp = eig_symmetric(pair.h_plus, cfg.eigen);
      dm = eig_symmetric(pair.h_minus, cfg.eigen);
      vp = dp.values();
      vm = dm.values();
    } else {
      vp = eigenvalues_symmetric(pair.h_plus, cfg.eigen);
      vm = eigenvalues_symmetric(pair.h_minus, cfg.eigen);
    }
  } catch (const ConvergenceError& e) {
    throw RealizationError("realization " + std::to_string(index) + ": " + e.what(), index);
  }

  r.eigenvalues = vp.size();
  r.min_plus = vp.front();
  r.max_plus = vp.back();
  r.min_minus = vm.front();
  r.max_minus = vm.back();
  r.out_of_band_plus = count_outside(vp, plan.bands_plus);
  r.out_of_band_minus = count_outside(vm, plan.bands_minus);
  r.excluded = r.out_of_band_plus + r.out_of_band_minus > 0;

  const BoxSpec& box = cfg.box;
  switch (cfg.kind) {
    case ExperimentKind::Dos: {
      const auto np = plan.vectors ? dos_estimate(dp, box, cfg.dos.estimator, cfg.dos.site) : dos_from_eigenvalues(vp, box);
      const auto nm = plan.vectors ? dos_estimate(dm, box, cfg.dos.estimator, cfg.dos.site) : dos_from_eigenvalues(vm, box);
      r.plus_atoms = np.atoms();
      r.minus_atoms = nm.atoms();
      break;
    }
    case ExperimentKind::Ilac: {
      const auto rho = rho_estimate(dp, dm, overlap_matrix(dp, dm), box);
      const auto curve = ilac_curve(rho);
      const auto marginal = rotated_marginal(rho);
      auto& a = r.series["ilac"];
      auto& b = r.series["ilac_marginal"];
      for (double e : plan.grid) {
        a.push_back(curve.at(e));
        b.push_back(marginal.mass({-std::numeric_limits<double>::infinity(), e / std::numbers::sqrt2, false, true}));
      }
      break;
    }
    case ExperimentKind::Rho: {
      const auto rho = rho_estimate(dp, dm, overlap_matrix(dp, dm), box);
      const auto np = dos_estimate(dp, box);
      const auto nm = dos_estimate(dm, box);
      auto& lhs = r.series["rho"];
      auto& sp = r.series["n_plus"];
      auto& sm = r.series["n_minus"];
      for (const auto& q : plan.rects) {
        const auto rep =
            prop3_check(rho, np, nm, Interval::half_open(q.plus_lo, q.plus_hi), Interval::half_open(q.minus_lo, q.minus_hi));
        lhs.push_back(rep.lhs);
        sp.push_back(rep.rhs_plus);
        sm.push_back(rep.rhs_minus);
        if (!rep.holds) ++r.violations;
      }
      if (cfg.realizations * rho.size() <= cfg.rho.atom_limit) r.rho_atoms = rho.atoms();
      break;
    }
    case ExperimentKind::Corners: {
      const auto overlaps = overlap_matrix(dp, dm);
      const std::size_t n = dp.size();
      const double inv = 1.0 / static_cast<double>(n);
      std::vector<Atom2D> atoms;
      for (std::size_t i = 0; i < n; ++i) {
        if (!plan.corner_bands_plus.contains(vp[i])) continue;
        for (std::size_t j = 0; j < n; ++j)
          if (plan.corner_bands_minus.contains(vm[j])) atoms.push_back({vp[i], vm[j], overlaps(i, j) * inv});
      }
      const auto curve = ilac_curve(EmpiricalMeasure2D(std::move(atoms)));
      auto& inc = r.series["increment"];
      for (const auto& g : plan.good)
        for (double a : plan.a_values) inc.push_back(curve.increment(to_double(g.corner.sum()), a));
      r.plus_atoms = in_band(dos_from_eigenvalues(vp, box), plan.corner_bands_plus);
      r.minus_atoms = in_band(dos_from_eigenvalues(vm, box), plan.corner_bands_minus);
      r.excluded = count_outside(vp, plan.corner_bands_plus) + count_outside(vm, plan.corner_bands_minus) > 0;
      break;
    }
    case ExperimentKind::Tails: {
      TailProfile profile;
      if (cfg.tails.measure == "ilac") {
        profile = tail_profile(ilac_curve(rho_estimate(dp, dm, overlap_matrix(dp, dm), box)), plan.edge, plan.deltas,
                               cfg.tails.side);
      } else {
        const auto& values = cfg.tails.measure == "dos_plus" ? vp : vm;
        profile = tail_profile(dos_from_eigenvalues(values, box), plan.edge, plan.deltas, cfg.tails.side);
      }
      auto& mass = r.series["mass"];
      for (const auto& s : profile.samples) mass.push_back(s.mass);
      break;
    }
    case ExperimentKind::Verify21: {
      if (r.excluded) break;
      const auto curve = ilac_curve(rho_estimate(dp, dm, overlap_matrix(dp, dm), box));
      const auto rows = theorem21_verify(curve, dos_from_eigenvalues(vp, box), dos_from_eigenvalues(vm, box),
                                         plan.e_plus, plan.e_minus, plan.e_plus_top, plan.e_minus_top, plan.a21);
      for (const auto& row : rows) {
        r.series["lhs"].push_back(row.lhs);
        r.series["plus_wide"].push_back(row.plus_wide);
        r.series["minus_wide"].push_back(row.minus_wide);
        r.series["plus_tight"].push_back(row.plus_tight);
        r.series["minus_tight"].push_back(row.minus_tight);
        if (!row.holds) ++r.violations;
      }
      break;
    }
    case ExperimentKind::Verify31: {
      const auto curve = ilac_curve(rho_estimate(dp, dm, overlap_matrix(dp, dm), box));
      auto& mass = r.series["mass"];
      for (const auto& e : plan.plan31.energies)
        for (const auto& s : tail_profile(curve, e.energy, plan.deltas31).samples) mass.push_back(s.mass);
      break;
    }
    case ExperimentKind::Covariance: break;
  }
  return r;
}

PartialResult run_with_plan(const Plan& plan, std::uint64_t first, std::uint64_t count) {
  PartialResult out;
  out.fingerprint = config_fingerprint(plan.cfg);
  out.realizations = parallel_map(static_cast<std::size_t>(count), plan.cfg.workers,
                                  [&](std::size_t i) { return compute_realization(plan, first + i); });
  return out;
}

// ---------------------------------------------------------------------------
// Output helpers.

struct OutputSet {
  std::vector<std::pair<std::string, std::string>> files;  // name, content

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
  void add_json(std::string name, const json& j) { add(std::move(name), j.dump(2) + "\n"); }
};

std::string csv(const std::vector<double>& row) {
  std::string s;
  for (std::size_t k = 0; k < row.size(); ++k) s += (k ? "," : "") + format_csv(row[k]);
  return s;
}

std::string measure_csv(const std::vector<Atom1D>& atoms) {
  std::string s = "position,weight\n";
  s.reserve(atoms.size() * 48);
  for (const auto& a : atoms) s += format_csv(a.position) + "," + format_csv(a.weight) + "\n";
  return s;
}

json bands_json(const BandStructure& b) {
  json out = json::array();
  for (const auto& x : b.bands) out.push_back({x.lo, x.hi});
  return out;
}

json corner_json(const Corner& c) {
  return {{"exact", {to_string(c.plus), to_string(c.minus)}}, {"value", {to_double(c.plus), to_double(c.minus)}}};
}

json report_json(const GoodCornerReport& rep, const RectangleSet& sigma) {
  json k = json::array();
  for (const auto& c : rep.k_set) k.push_back(corner_json(c));
  json witness = nullptr;
  if (rep.witness) {
    const auto& rect = sigma.rectangles[rep.witness->rectangle];
    witness = {{"rectangle", {rect.i, rect.j}},
               {"plus_from", to_string(rep.witness->plus_from)},
               {"plus_to", to_string(rep.witness->plus_to)}};
  }
  return {{"corner", corner_json(rep.corner)}, {"is_good", rep.is_good}, {"K", k}, {"witness", witness}};
}

json fit_json(const LifshitzFit& fit) {
  return {{"alpha", fit.alpha},
          {"constant", fit.constant},
          {"r_squared", fit.r_squared},
          {"points_used", fit.points_used},
          {"valid", fit.valid},
          {"lifshitz_like", fit.lifshitz_like},
          {"zero_mass_points", fit.zero_mass_points},
          {"saturated_points", fit.saturated_points},
          {"verdict", fit.verdict},
          {"warnings", fit.warnings}};
}

json convexity_json(const ConvexityProxy& c) {
  return {{"slopes", c.slopes}, {"second_differences", c.second_differences}, {"satisfied", c.satisfied}};
}

std::string profile_row(const TailSample& s) {
  const bool usable = s.mass > 0.0 && s.mass < 1.0;
  return format_csv(s.delta) + "," + format_csv(s.mass) + "," + format_csv(std::log(s.delta)) + "," +
         (usable ? format_csv(std::log(-std::log(s.mass))) : std::string("nan"));
}

std::vector<Atom1D> pooled(const PartialResult& merged, bool plus, double weight) {
  std::vector<Atom1D> atoms;
  for (const auto& r : merged.realizations)
    for (const auto& a : plus ? r.plus_atoms : r.minus_atoms) atoms.push_back({a.position, a.weight * weight});
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom1D& x, const Atom1D& y) { return x.position < y.position || (x.position == y.position && x.weight < y.weight); });
  return atoms;
}

json leakage_json(const PartialResult& merged) {
  std::size_t eig = 0, op = 0, om = 0, touched = 0;
  double min_p = std::numeric_limits<double>::infinity(), max_p = -min_p, min_m = min_p, max_m = -min_p;
  double sum_min_p = 0.0, sum_min_m = 0.0;
  for (const auto& r : merged.realizations) {
    eig += r.eigenvalues;
    op += r.out_of_band_plus;
    om += r.out_of_band_minus;
    if (r.out_of_band_plus + r.out_of_band_minus > 0) ++touched;
    min_p = std::min(min_p, r.min_plus);
    max_p = std::max(max_p, r.max_plus);
    min_m = std::min(min_m, r.min_minus);
    max_m = std::max(max_m, r.max_minus);
    sum_min_p += r.min_plus;
    sum_min_m += r.min_minus;
  }
  const double n = static_cast<double>(merged.realizations.size());
  return {{"eigenvalues_per_operator", eig},
          {"out_of_band_plus", op},
          {"out_of_band_minus", om},
          {"fraction_plus", eig ? static_cast<double>(op) / static_cast<double>(eig) : 0.0},
          {"fraction_minus", eig ? static_cast<double>(om) / static_cast<double>(eig) : 0.0},
          {"realizations_with_leakage", touched},
          {"min_eigenvalue_plus", min_p},
          {"max_eigenvalue_plus", max_p},
          {"min_eigenvalue_minus", min_m},
          {"max_eigenvalue_minus", max_m},
          {"mean_min_eigenvalue_plus", sum_min_p / n},
          {"mean_min_eigenvalue_minus", sum_min_m / n}};
}

// ---------------------------------------------------------------------------
// Kind-specific reductions.

int reduce_dos(const Plan& plan, const PartialResult& merged, OutputSet& out, json& summary) {
  const auto& cfg = plan.cfg;
  const double w = 1.0 / static_cast<double>(merged.realizations.size());
  const EmpiricalMeasure1D np(pooled(merged, true, w), cfg.dos.estimator);
  const EmpiricalMeasure1D nm(pooled(merged, false, w), cfg.dos.estimator);
  out.add("dos_plus.csv", measure_csv(np.atoms()));
  out.add("dos_minus.csv", measure_csv(nm.atoms()));

  const auto hp = histogram(np, cfg.dos.hist_lo, cfg.dos.hist_hi, cfg.dos.hist_bins);
  const auto hm = histogram(nm, cfg.dos.hist_lo, cfg.dos.hist_hi, cfg.dos.hist_bins);
  const double h = (cfg.dos.hist_hi - cfg.dos.hist_lo) / static_cast<double>(cfg.dos.hist_bins);
  std::string hist = "bin_lo,bin_hi,mass_plus,mass_minus\n";
  for (std::size_t k = 0; k < hp.size(); ++k) {
    const double lo = cfg.dos.hist_lo + h * static_cast<double>(k);
    hist += csv({lo, lo + h, hp[k], hm[k]}) + "\n";
  }
  out.add("dos_histogram.csv", hist);

  summary = {{"estimator", to_string(cfg.dos.estimator)},
             {"site", cfg.dos.estimator == Estimator::LocalAtSite ? json(cfg.dos.site.value_or(cfg.box.center_site()))
                                                                    : json(nullptr)},
             {"realizations", merged.realizations.size()},
             {"atoms_plus", np.size()},
             {"atoms_minus", nm.size()},
             {"total_mass_plus", np.total_mass()},
             {"total_mass_minus", nm.total_mass()},
             {"bands_plus", bands_json(plan.bands_plus)},
             {"bands_minus", bands_json(plan.bands_minus)}};
  out.add_json("dos.json", summary);
  return kExitOk;
}

int reduce_ilac(const Plan& plan, const PartialResult& merged, OutputSet& out, json& summary) {
  const auto a = mean_series(merged, "ilac", false);
  const auto b = mean_series(merged, "ilac_marginal", false);
  std::string text = "energy,ilac,ilac_marginal\n";
  double worst = 0.0;
  for (std::size_t k = 0; k < plan.grid.size(); ++k) {
    text += csv({plan.grid[k], a[k], b[k]}) + "\n";
    worst = std::max(worst, std::abs(a[k] - b[k]));
  }
  out.add("ilac_grid.csv", text);
  summary = {{"realizations", merged.realizations.size()},
             {"grid_points", plan.grid.size()},
             {"total_mass", a.empty() ? 0.0 : a.back()},
             {"max_route_difference", worst},
             {"routes_agree", worst <= 1e-10}};
  out.add_json("ilac.json", summary);
  return worst <= 1e-10 ? kExitOk : kExitVerification;
}

int reduce_rho(const Plan& plan, const PartialResult& merged, OutputSet& out, json& summary) {
  const auto rho = mean_series(merged, "rho", false);
  const auto sp = mean_series(merged, "n_plus", false);
  const auto sm = mean_series(merged, "n_minus", false);
  std::size_t violations = 0, merged_failures = 0;
  for (const auto& r : merged.realizations) violations += r.violations;
  std::string text = "plus_lo,plus_hi,minus_lo,minus_hi,rho,n_plus,n_minus,holds\n";
  for (std::size_t k = 0; k < plan.rects.size(); ++k) {
    const auto& q = plan.rects[k];
    const bool holds = rho[k] <= std::min(sp[k], sm[k]) + 1e-12;
    if (!holds) ++merged_failures;
    text += csv({q.plus_lo, q.plus_hi, q.minus_lo, q.minus_hi, rho[k], sp[k], sm[k]}) + "," + (holds ? "1" : "0") + "\n";
  }
  out.add("rho_rectangles.csv", text);

  bool atoms_written = false;
  std::size_t atom_count = 0;
  for (const auto& r : merged.realizations) atom_count += r.rho_atoms.size();
  if (atom_count > 0 && atom_count <= plan.cfg.rho.atom_limit) {
    std::vector<EmpiricalMeasure2D> parts;
    for (const auto& r : merged.realizations) parts.emplace_back(r.rho_atoms);
    const auto m = merge_measures(std::span<const EmpiricalMeasure2D>(parts));
    std::string s = "position,position2,weight\n";
    for (const auto& a : m.atoms()) s += csv({a.plus, a.minus, a.weight}) + "\n";
    out.add("rho_atoms.csv", s);
    atoms_written = true;
  }
  summary = {{"realizations", merged.realizations.size()},
             {"rectangles", plan.rects.size()},
             {"per_realization_violations", violations},
             {"merged_violations", merged_failures},
             {"atoms_written", atoms_written}};
  out.add_json("rho.json", summary);
  return violations + merged_failures == 0 ? kExitOk : kExitVerification;
}

int reduce_corners(const Plan& plan, const PartialResult& merged, OutputSet& out, json& summary) {
  bool ok = true;
  json corners = json::array();
  for (const auto& rep : plan.reports) corners.push_back(report_json(rep, plan.sigma));
  out.add_json("corners.json", {{"bands_plus", plan.exact_plus.to_string()},
                                {"bands_minus", plan.exact_minus.to_string()},
                                {"rectangles", plan.sigma.rectangles.size()},
                                {"corners", corners}});

  json t23 = nullptr;
  if (plan.exact_plus.bands.size() == 2 && plan.exact_minus.bands.size() == 2) {
    const auto res = theorem23_predicate(plan.exact_plus, plan.exact_minus);
    json chain = json::array(), good = json::array(), extras = json::array();
    for (const auto& v : res.chain) chain.push_back(to_string(v));
    for (const auto& c : res.good_corners) good.push_back(corner_json(c));
    for (const auto& c : res.symmetric_extras) extras.push_back(corner_json(c));
    t23 = {{"ordering_holds", res.ordering_holds},
           {"chain", chain},
           {"good_corners", good},
           {"symmetric_extras", extras},
           {"all_confirmed", res.all_confirmed}};
    if (res.ordering_holds && !res.all_confirmed) ok = false;
    out.add_json("two_band_ordering.json", t23);
  }

  json covers = json::array();
  std::size_t uncovered = 0;
  for (const auto& g : plan.good) {
    for (std::size_t k = 0; k < plan.a_exact.size(); ++k) {
      const auto cover = strip_cover(plan.sigma, g.corner, plan.a_exact[k]);
      json squares = json::array();
      for (const auto& q : cover.squares)
        squares.push_back({{"plus", {to_string(q.plus_lo), to_string(q.plus_hi)}},
                           {"minus", {to_string(q.minus_lo), to_string(q.minus_hi)}},
                           {"anchor", corner_json(q.anchor)}});
      if (!cover.contained) ++uncovered;
      covers.push_back({{"corner", corner_json(g.corner)},
                        {"a", to_string(plan.a_exact[k])},
                        {"squares", squares},
                        {"contained", cover.contained},
                        {"counterexample", cover.counterexample ? corner_json(*cover.counterexample) : json(nullptr)}});
    }
  }
  out.add_json("strip_cover.json", covers);
  if (uncovered) ok = false;

  const double w = 1.0 / static_cast<double>(merged.realizations.size());
  const EmpiricalMeasure1D np(pooled(merged, true, w), Estimator::CountPerVolume);
  const EmpiricalMeasure1D nm(pooled(merged, false, w), Estimator::CountPerVolume);
  const auto inc = mean_series(merged, "increment", false);
  std::size_t leaking = 0, total = 0;
  for (const auto& r : merged.realizations) {
    total += 2 * r.eigenvalues;
    leaking += r.eigenvalues - r.plus_atoms.size() + r.eigenvalues - r.minus_atoms.size();
  }
  const double leakage = total ? static_cast<double>(leaking) / static_cast<double>(total) : 0.0;
  const bool meaningful = leakage < 0.05;
  std::size_t bound_failures = 0;
  std::string text = "corner,a,ilac_increment,bound,holds\n";
  for (std::size_t g = 0; g < plan.good.size(); ++g) {
    for (std::size_t k = 0; k < plan.a_values.size(); ++k) {
      const double lhs = inc[g * plan.a_values.size() + k];
      const double bound = theorem22_bound(plan.good[g].k_set, np, nm, plan.a_values[k]);
      const bool holds = lhs <= bound + 1e-9;
      if (!holds) ++bound_failures;
      const auto& c = plan.good[g].corner;
      text += "\"(" + format_csv(to_double(c.plus)) + " " + format_csv(to_double(c.minus)) + ")\"," +
              csv({plan.a_values[k], lhs, bound}) + "," + (holds ? "1" : "0") + "\n";
    }
  }
  out.add("bounds.csv", text);
  if (meaningful && bound_failures) ok = false;

  std::size_t good_count = plan.good.size();
  summary = {{"corners", plan.reports.size()},
             {"good_corners", good_count},
             {"two_band_ordering", t23.is_null() ? json(nullptr) : t23["ordering_holds"]},
             {"strip_covers_failed", uncovered},
             {"bound_failures", bound_failures},
             {"in_band_leakage_fraction", leakage},
             {"bound_check_meaningful", meaningful}};
  out.add_json("corners_summary.json", summary);
  return ok ? kExitOk : kExitVerification;
}

int reduce_tails(const Plan& plan, const PartialResult& merged, OutputSet& out, json& summary) {
  const auto mass = mean_series(merged, "mass", false);
  TailProfile profile{plan.edge, plan.cfg.tails.side, {}};
  for (std::size_t k = 0; k < plan.deltas.size(); ++k) profile.samples.push_back({plan.deltas[k], mass[k]});
  std::string text = "delta,mass,log_delta,loglog_mass\n";
  for (const auto& s : profile.samples) text += profile_row(s) + "\n";
  out.add("tail_profile.csv", text);
  const auto fit = lifshitz_exponent_fit(profile);
  const auto convex = convexity_proxy(profile);
  summary = {{"measure", plan.cfg.tails.measure},
             {"edge", plan.edge},
             {"side", to_string(plan.cfg.tails.side)},
             {"bandwidth", plan.bandwidth},
             {"realizations", merged.realizations.size()},
             {"fit", fit_json(fit)},
             {"convexity", convexity_json(convex)}};
  out.add_json("tail_fit.json", summary);
  return kExitOk;
}

int reduce_verify21(const Plan& plan, const PartialResult& merged, OutputSet& out, json& summary) {
  std::size_t excluded = 0, violations = 0;
  for (const auto& r : merged.realizations) {
    if (r.excluded) ++excluded;
    violations += r.violations;
  }
  const std::size_t used = merged.realizations.size() - excluded;
  const double fraction = static_cast<double>(excluded) / static_cast<double>(merged.realizations.size());
  std::string text =
      "edge,a,lhs,n_plus_tight,n_minus_tight,bound_tight,holds,n_plus_wide,n_minus_wide,bound_wide,holds_wide\n";
  std::size_t failures = 0;
  if (used > 0) {
    const auto lhs = mean_series(merged, "lhs", true);
    const auto pw = mean_series(merged, "plus_wide", true);
    const auto mw = mean_series(merged, "minus_wide", true);
    const auto pt = mean_series(merged, "plus_tight", true);
    const auto mt = mean_series(merged, "minus_tight", true);
    for (std::size_t k = 0; k < lhs.size(); ++k) {
      const bool lower = k < plan.a21.size();
      const double a = plan.a21[lower ? k : k - plan.a21.size()];
      const double bt = std::min(pt[k], mt[k]);
      const double bw = std::min(pw[k], mw[k]);
      const bool holds = lhs[k] <= bt + kInequalityTolerance;
      const bool holds_wide = lhs[k] <= bw + kInequalityTolerance;
      if (!holds) ++failures;
      text += std::string(lower ? "lower" : "upper") + "," + csv({a, lhs[k], pt[k], mt[k], bt}) + "," +
              (holds ? "1" : "0") + "," + csv({pw[k], mw[k], bw}) + "," + (holds_wide ? "1" : "0") + "\n";
    }
  }
  out.add("verify21.csv", text);
  const json leak = leakage_json(merged);
  summary = {{"e_plus", plan.e_plus},
             {"e_minus", plan.e_minus},
             {"e_plus_top", plan.e_plus_top},
             {"e_minus_top", plan.e_minus_top},
             {"realizations", merged.realizations.size()},
             {"excluded", excluded},
             {"exclusion_fraction", fraction},
             {"per_realization_violations", violations},
             {"merged_failures", failures},
             {"all_hold", used > 0 && failures == 0 && violations == 0},
             {"min_eigenvalue_plus", leak["min_eigenvalue_plus"]},
             {"min_eigenvalue_minus", leak["min_eigenvalue_minus"]},
             {"lower_edge_gap_plus", leak["min_eigenvalue_plus"].get<double>() - plan.e_plus},
             {"lower_edge_gap_minus", leak["min_eigenvalue_minus"].get<double>() - plan.e_minus}};
  out.add_json("verify21.json", summary);
  const bool ok = used > 0 && failures == 0 && violations == 0 && fraction < 0.05;
  return ok ? kExitOk : kExitVerification;
}

int reduce_verify31(const Plan& plan, const PartialResult& merged, OutputSet& out, json& summary) {
  const auto mass = mean_series(merged, "mass", false);
  const auto& p31 = plan.plan31;
  const RectangleSet sigma = build_sigma(ExactBands::from(p31.plus), ExactBands::from(p31.minus));
  std::string text = "label,energy,delta,mass,log_delta,loglog_mass\n";
  json energies = json::array();
  const std::size_t nd = plan.deltas31.size();
  for (std::size_t e = 0; e < p31.energies.size(); ++e) {
    const auto& probe = p31.energies[e];
    TailProfile profile{probe.energy, TailSide::TwoSided, {}};
    for (std::size_t k = 0; k < nd; ++k) profile.samples.push_back({plan.deltas31[k], mass[e * nd + k]});
    for (const auto& s : profile.samples) text += "\"" + probe.label + "\"," + format_csv(probe.energy) + "," + profile_row(s) + "\n";
    energies.push_back({{"label", probe.label},
                        {"internal", probe.internal},
                        {"energy", probe.energy},
                        {"certificate", report_json(classify_corner(sigma, probe.corner), sigma)},
                        {"fit", fit_json(lifshitz_exponent_fit(profile))},
                        {"convexity", convexity_json(convexity_proxy(profile))}});
  }
  out.add("verify31_profiles.csv", text);
  summary = {{"bands_plus", bands_json(p31.plus)},
             {"bands_minus", bands_json(p31.minus)},
             {"internal_probed", p31.internal_probed},
             {"internal_note", p31.internal_note},
             {"regularity_met", p31.regularity_met},
             {"regularity_power", p31.regularity_power},
             {"regularity_note", p31.regularity_note},
             {"realizations", merged.realizations.size()},
             {"energies", energies}};
  out.add_json("verify31.json", summary);
  return kExitOk;
}

int run_covariance(const ExperimentConfig& cfg, OutputSet& out, json& summary) {
  const TorusSpace torus(cfg.covariance.dimension, cfg.covariance.modulus);
  const double pou = torus.partition_of_unity_error();
  const double group = torus.size() <= 256 ? torus.group_law_error() : 0.0;

  struct Trial {
    json record;
    bool pass = true;
    double worst = 0.0;
  };
  const auto trials = parallel_map(cfg.covariance.trials, cfg.workers, [&](std::size_t t) {
    const std::uint64_t key = realization_key(cfg.seed, t);
    const auto omega = random_potential(torus, key);
    const Recipe a = random_recipe(key, 4 * t, false);
    const Recipe b = random_recipe(key, 4 * t + 1, false);
    const Recipe c = random_recipe(key, 4 * t + 2, false);
    const Recipe p1 = random_recipe(mix64(key + 1), 4 * t + 3, true);
    const Recipe p2 = random_recipe(mix64(key + 1), 4 * t + 4, true);

    Trial out;
    json checks = json::array();
    auto record = [&](const IdentityCheck& c) {
      checks.push_back({{"identity", c.identity}, {"lhs", c.lhs}, {"rhs", c.rhs}, {"diff", c.diff}, {"pass", c.pass}});
      out.pass = out.pass && c.pass;
      out.worst = std::max(out.worst, c.diff);
    };
    CounterRng rng(mix64(key ^ 0x7368696674ULL));
    const std::vector<std::size_t> shifts = {1 % torus.size(), static_cast<std::size_t>(rng.below(torus.size()))};
    for (const Recipe* r : {&a, &b, &c, &p1, &p2}) {
      const double scale = std::max(1.0, max_abs(realize(*r, torus, omega)));
      const double err = equivariance_error(*r, torus, omega, shifts);
      checks.push_back({{"identity", "equivariance"},
                        {"family", r->describe()},
                        {"lhs", err},
                        {"rhs", 0.0},
                        {"diff", err},
                        {"pass", err <= 1e-12 * scale}});
      out.pass = out.pass && err <= 1e-12 * scale;
    }
    record(prop1_identity_check(a, b, torus, omega));
    const auto cor2 = cor2_checks(a, b, c, torus, omega);
    record(cor2.cyclic);
    const auto pos = cor2_checks(p1, p2, c, torus, omega);
    checks.push_back({{"identity", "positivity"},
                      {"lhs", pos.positivity_value},
                      {"rhs", 0.0},
                      {"diff", std::max(0.0, -pos.positivity_value)},
                      {"pass", pos.positivity_applicable && pos.positivity_pass}});
    out.pass = out.pass && pos.positivity_applicable && pos.positivity_pass;
    record(orbit_consistency_check(a, b, torus, omega));
    out.record = {{"trial", t},
                  {"families", {{"A", a.describe()}, {"B", b.describe()}, {"C", c.describe()},
                                {"P1", p1.describe()}, {"P2", p2.describe()}}},
                  {"checks", checks}};
    return out;
  });

  bool all = pou == 0.0 && group == 0.0;
  double worst = 0.0;
  std::size_t failed = 0;
  json records = json::array();
  for (const auto& t : trials) {
    records.push_back(t.record);
    all = all && t.pass;
    worst = std::max(worst, t.worst);
    if (!t.pass) ++failed;
  }
  summary = {{"dimension", torus.dimension()},
             {"modulus", torus.modulus()},
             {"partition_of_unity_error", pou},
             {"group_law_error", group},
             {"trials", trials.size()},
             {"failed_trials", failed},
             {"max_identity_diff", worst},
             {"all_pass", all}};
  json doc = summary;
  doc["records"] = records;
  out.add_json("covariance.json", doc);
  return all ? kExitOk : kExitVerification;
}

}  // namespace

PartialResult run_realizations(const ExperimentConfig& config, std::uint64_t first, std::uint64_t count) {
  if (config.kind == ExperimentKind::Covariance) throw InvalidArgument("covariance runs have no disorder realizations");
  return run_with_plan(make_plan(config), first, count);
}

PartialResult merge_results(std::span<const PartialResult> parts) {
  if (parts.empty()) throw InvalidArgument("merge_results: nothing to merge");
  PartialResult out;
  out.fingerprint = parts.front().fingerprint;
  for (const auto& p : parts) {
    if (p.fingerprint != out.fingerprint) throw InvalidArgument("merge_results: partials come from different configs");
    out.realizations.insert(out.realizations.end(), p.realizations.begin(), p.realizations.end());
  }
  std::sort(out.realizations.begin(), out.realizations.end(),
            [](const RealizationResult& a, const RealizationResult& b) { return a.index < b.index; });
  for (std::size_t k = 1; k < out.realizations.size(); ++k)
    if (out.realizations[k].index == out.realizations[k - 1].index)
      throw InvalidArgument("merge_results: realization " + std::to_string(out.realizations[k].index) +
                            " appears twice");
  return out;
}

std::vector<double> mean_series(const PartialResult& merged, const std::string& name, bool skip_excluded) {
  std::vector<double> sum;
  std::size_t count = 0;
  for (const auto& r : merged.realizations) {
    if (skip_excluded && r.excluded) continue;
    const auto it = r.series.find(name);
    if (it == r.series.end()) continue;
    if (sum.empty()) sum.assign(it->second.size(), 0.0);
    if (it->second.size() != sum.size()) throw DimensionMismatch("series '" + name + "' changes length");
    for (std::size_t k = 0; k < sum.size(); ++k) sum[k] += it->second[k];
    ++count;
  }
  for (double& v : sum) v /= static_cast<double>(count);
  return sum;
}

RunResult run_experiment(const ExperimentConfig& config) {
  const auto started = std::chrono::steady_clock::now();
  const Plan plan = make_plan(config);
  OutputSet out;
  json summary;
  RunResult result;
  json leakage = nullptr;
  std::vector<std::string> keys;

  if (config.kind == ExperimentKind::Covariance) {
    result.status = run_covariance(config, out, summary);
  } else {
    PartialResult part = run_with_plan(plan, 0, config.realizations);
    const PartialResult merged = merge_results(std::span<const PartialResult>(&part, 1));
    part.realizations.clear();
    leakage = leakage_json(merged);
    for (std::uint64_t i = 0; i < config.realizations; ++i) keys.push_back(hex64(realization_key(config.seed, i)));
    switch (config.kind) {
      case ExperimentKind::Dos: result.status = reduce_dos(plan, merged, out, summary); break;
      case ExperimentKind::Ilac: result.status = reduce_ilac(plan, merged, out, summary); break;
      case ExperimentKind::Rho: result.status = reduce_rho(plan, merged, out, summary); break;
      case ExperimentKind::Corners: result.status = reduce_corners(plan, merged, out, summary); break;
      case ExperimentKind::Tails: result.status = reduce_tails(plan, merged, out, summary); break;
      case ExperimentKind::Verify21: result.status = reduce_verify21(plan, merged, out, summary); break;
      case ExperimentKind::Verify31: result.status = reduce_verify31(plan, merged, out, summary); break;
      case ExperimentKind::Covariance: break;
    }
  }

  namespace fs = std::filesystem;
  const fs::path dir(config.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());

  json digests = json::object();
  std::sort(out.files.begin(), out.files.end());
  for (const auto& [name, content] : out.files) {
    const fs::path path = dir / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
    f << content;
    f.close();
    if (!f) throw std::runtime_error("error while writing '" + path.string() + "'");
    digests[name] = sha256_hex(content);
    result.files.push_back(name);
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  result.summary = summary;
  result.manifest = {{"tool", "ilaclab"},
                     {"version", ILACLAB_VERSION},
                     {"kind", to_string(config.kind)},
                     {"status", result.status},
                     {"config", config.to_json()},
                     {"config_text", config.serialize()},
                     {"boundary", to_string(config.box.boundary)},
                     {"workers", config.workers},
                     {"realization_keys", keys},
                     {"timing", {{"wall_seconds", seconds}}},
                     {"leakage", leakage},
                     {"outputs", digests},
                     {"summary", summary}};
  const fs::path manifest = dir / "manifest.json";
  std::ofstream f(manifest, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + manifest.string() + "'");
  f << result.manifest.dump(2) << "\n";
  return result;
}

}  // namespace ilac
