#include "ilaclab/config.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ilaclab/error.hpp"
#include "ilaclab/geometry.hpp"

namespace ilac {

namespace pt = boost::property_tree;

namespace {

constexpr std::array<ExperimentKind, 8> kAllKinds = {
    ExperimentKind::Dos,     ExperimentKind::Ilac,     ExperimentKind::Rho,      ExperimentKind::Corners,
    ExperimentKind::Tails,   ExperimentKind::Verify21, ExperimentKind::Verify31, ExperimentKind::Covariance};

}  // namespace

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::Dos: return "dos";
    case ExperimentKind::Ilac: return "ilac";
    case ExperimentKind::Rho: return "rho";
    case ExperimentKind::Corners: return "corners";
    case ExperimentKind::Tails: return "tails";
    case ExperimentKind::Verify21: return "verify21";
    case ExperimentKind::Verify31: return "verify31";
    case ExperimentKind::Covariance: return "covariance";
  }
  return "dos";
}

ExperimentKind parse_experiment_kind(const std::string& text) {
  for (auto k : kAllKinds)
    if (to_string(k) == text) return k;
  throw ConfigError("unknown experiment kind '" + text + "'");
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_csv(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& raw) {
  const std::string text = trimmed(raw);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("key '" + key + "': expected a number, got '" + raw + "'");
  return v;
}

template <class T>
T parse_unsigned(const std::string& key, const std::string& raw) {
  const std::string text = trimmed(raw);
  T v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("key '" + key + "': expected a nonnegative integer, got '" + raw + "'");
  return v;
}

int parse_int(const std::string& key, const std::string& raw) {
  const std::string text = trimmed(raw);
  int v = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("key '" + key + "': expected an integer, got '" + raw + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& raw) {
  const std::string text = trimmed(raw);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + raw + "'");
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trimmed(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& raw) {
  std::vector<double> out;
  for (const auto& item : split(raw, ',')) out.push_back(parse_double(key, item));
  return out;
}

std::string join(const std::vector<double>& values) {
  std::string s;
  for (std::size_t k = 0; k < values.size(); ++k) s += (k ? ", " : "") + format_double(values[k]);
  return s;
}

std::string join(const std::vector<std::string>& values) {
  std::string s;
  for (std::size_t k = 0; k < values.size(); ++k) s += (k ? ", " : "") + values[k];
  return s;
}

std::vector<RectangleQuery> parse_rectangles(const std::string& key, const std::string& raw) {
  std::vector<RectangleQuery> out;
  for (const auto& item : split(raw, ';')) {
    std::istringstream fields(item);
    std::vector<double> v;
    std::string tok;
    while (fields >> tok) v.push_back(parse_double(key, tok));
    if (v.size() != 4) throw ConfigError("key '" + key + "': each rectangle needs four numbers");
    out.push_back({v[0], v[1], v[2], v[3]});
  }
  return out;
}

std::string join(const std::vector<RectangleQuery>& rects) {
  std::string s;
  for (std::size_t k = 0; k < rects.size(); ++k) {
    const auto& r = rects[k];
    s += (k ? "; " : "") + format_double(r.plus_lo) + " " + format_double(r.plus_hi) + " " +
         format_double(r.minus_lo) + " " + format_double(r.minus_hi);
  }
  return s;
}

Boundary parse_boundary(const std::string& text) {
  if (text == "dirichlet") return Boundary::Dirichlet;
  if (text == "periodic") return Boundary::Periodic;
  throw ConfigError("unknown boundary '" + text + "' (dirichlet, periodic)");
}

DistributionKind parse_distribution(const std::string& text) {
  if (text == "uniform") return DistributionKind::UniformInterval;
  if (text == "bernoulli") return DistributionKind::Bernoulli;
  if (text == "two_interval") return DistributionKind::TwoIntervalUniform;
  throw ConfigError("unknown potential kind '" + text + "' (uniform, bernoulli, two_interval)");
}

Estimator parse_estimator(const std::string& text) {
  if (text == "count_per_volume") return Estimator::CountPerVolume;
  if (text == "local_at_site") return Estimator::LocalAtSite;
  throw ConfigError("unknown estimator '" + text + "' (count_per_volume, local_at_site)");
}

// Flat view of the INI tree: "section.key" -> value, root keys without a dot.
using Flat = std::map<std::string, std::string>;

Flat flatten(const pt::ptree& tree) {
  Flat flat;
  static const std::set<std::string> sections = {"box",     "potential", "eigen",    "dos",      "ilac",
                                                 "rho",     "corners",   "tails",    "verify21", "verify31",
                                                 "covariance"};
  for (const auto& [name, node] : tree) {
    if (node.empty() && node.data().empty() && sections.count(name)) continue;
    if (node.empty()) {
      flat[name] = node.data();
      continue;
    }
    for (const auto& [key, leaf] : node) {
      if (!leaf.empty()) throw ConfigError("nesting deeper than one section at '" + name + "." + key + "'");
      flat[name + "." + key] = leaf.data();
    }
  }
  return flat;
}

class Reader {
 public:
  explicit Reader(Flat flat) : flat_(std::move(flat)) {}

  const std::string* find(const std::string& key) {
    auto it = flat_.find(key);
    if (it == flat_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void check_all_used() const {
    for (const auto& [key, value] : flat_)
      if (!used_.count(key)) throw ConfigError("unknown config key '" + key + "'");
  }

 private:
  Flat flat_;
  std::set<std::string> used_;
};

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("config syntax error on line " + std::to_string(e.line()) + ": " + e.message());
  }
  Reader r(flatten(tree));
  ExperimentConfig c;

  auto str = [&](const std::string& key, auto&& apply) {
    if (const auto* v = r.find(key)) apply(trimmed(*v));
  };
  auto num = [&](const std::string& key, double& target) {
    str(key, [&](const std::string& v) { target = parse_double(key, v); });
  };
  auto opt_num = [&](const std::string& key, std::optional<double>& target) {
    str(key, [&](const std::string& v) {
      if (!v.empty()) target = parse_double(key, v);
    });
  };
  auto size = [&](const std::string& key, std::size_t& target) {
    str(key, [&](const std::string& v) { target = parse_unsigned<std::size_t>(key, v); });
  };
  auto integer = [&](const std::string& key, int& target) {
    str(key, [&](const std::string& v) { target = parse_int(key, v); });
  };
  auto list = [&](const std::string& key, std::vector<double>& target) {
    str(key, [&](const std::string& v) { target = parse_list(key, v); });
  };

  str("kind", [&](const std::string& v) { c.kind = parse_experiment_kind(v); });
  str("seed", [&](const std::string& v) { c.seed = parse_unsigned<std::uint64_t>("seed", v); });
  size("realizations", c.realizations);
  size("workers", c.workers);
  str("out", [&](const std::string& v) { c.out = v; });

  integer("box.dimension", c.box.dimension);
  integer("box.side_length", c.box.side_length);
  str("box.boundary", [&](const std::string& v) { c.box.boundary = parse_boundary(v); });
  size("box.max_sites", c.box.max_sites);

  auto& p = c.potential;
  str("potential.kind", [&](const std::string& v) { p.kind = parse_distribution(v); });
  num("potential.a1", p.a1);
  num("potential.b1", p.b1);
  num("potential.a2", p.a2);
  num("potential.b2", p.b2);
  num("potential.v0", p.v0);
  num("potential.v1", p.v1);
  opt_num("potential.p", p.p);
  str("potential.allow_point_mass",
      [&](const std::string& v) { p.allow_point_mass = parse_bool("potential.allow_point_mass", v); });

  num("eigen.symmetry_tolerance", c.eigen.symmetry_tolerance);
  integer("eigen.max_sweeps", c.eigen.max_sweeps);

  str("dos.estimator", [&](const std::string& v) { c.dos.estimator = parse_estimator(v); });
  str("dos.site", [&](const std::string& v) {
    if (!v.empty()) c.dos.site = parse_unsigned<std::size_t>("dos.site", v);
  });
  num("dos.hist_lo", c.dos.hist_lo);
  num("dos.hist_hi", c.dos.hist_hi);
  size("dos.hist_bins", c.dos.hist_bins);

  num("ilac.grid_lo", c.ilac.grid_lo);
  num("ilac.grid_hi", c.ilac.grid_hi);
  size("ilac.grid_points", c.ilac.grid_points);

  str("rho.rectangles", [&](const std::string& v) { c.rho.rectangles = parse_rectangles("rho.rectangles", v); });
  size("rho.random_rectangles", c.rho.random_rectangles);
  size("rho.atom_limit", c.rho.atom_limit);

  str("corners.bands_plus", [&](const std::string& v) { c.corners.bands_plus = v; });
  str("corners.bands_minus", [&](const std::string& v) { c.corners.bands_minus = v; });
  str("corners.a_grid", [&](const std::string& v) { c.corners.a_grid = split(v, ','); });

  str("tails.measure", [&](const std::string& v) { c.tails.measure = v; });
  opt_num("tails.edge", c.tails.edge);
  str("tails.side", [&](const std::string& v) {
    try {
      c.tails.side = parse_tail_side(v);
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
  });
  list("tails.deltas", c.tails.deltas);
  opt_num("tails.bandwidth", c.tails.bandwidth);

  list("verify21.a_grid", c.verify21.a_grid);
  opt_num("verify21.e_plus", c.verify21.e_plus);
  opt_num("verify21.e_minus", c.verify21.e_minus);
  opt_num("verify21.e_plus_top", c.verify21.e_plus_top);
  opt_num("verify21.e_minus_top", c.verify21.e_minus_top);

  list("verify31.deltas", c.verify31.deltas);

  integer("covariance.dimension", c.covariance.dimension);
  integer("covariance.modulus", c.covariance.modulus);
  size("covariance.trials", c.covariance.trials);

  r.check_all_used();
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse(text.str());
}

std::string ExperimentConfig::serialize() const {
  std::ostringstream o;
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  o << "kind = " << to_string(kind) << "\n"
    << "seed = " << seed << "\n"
    << "realizations = " << realizations << "\n"
    << "workers = " << workers << "\n"
    << "out = " << out << "\n\n";
  o << "[box]\n"
    << "dimension = " << box.dimension << "\n"
    << "side_length = " << box.side_length << "\n"
    << "boundary = " << to_string(box.boundary) << "\n"
    << "max_sites = " << box.max_sites << "\n\n";
  o << "[potential]\n"
    << "kind = " << to_string(potential.kind) << "\n"
    << "a1 = " << format_double(potential.a1) << "\n"
    << "b1 = " << format_double(potential.b1) << "\n"
    << "a2 = " << format_double(potential.a2) << "\n"
    << "b2 = " << format_double(potential.b2) << "\n"
    << "v0 = " << format_double(potential.v0) << "\n"
    << "v1 = " << format_double(potential.v1) << "\n"
    << "p = " << opt(potential.p) << "\n"
    << "allow_point_mass = " << (potential.allow_point_mass ? "true" : "false") << "\n\n";
  o << "[eigen]\n"
    << "symmetry_tolerance = " << format_double(eigen.symmetry_tolerance) << "\n"
    << "max_sweeps = " << eigen.max_sweeps << "\n\n";
  o << "[dos]\n"
    << "estimator = " << to_string(dos.estimator) << "\n"
    << "site = " << (dos.site ? std::to_string(*dos.site) : std::string()) << "\n"
    << "hist_lo = " << format_double(dos.hist_lo) << "\n"
    << "hist_hi = " << format_double(dos.hist_hi) << "\n"
    << "hist_bins = " << dos.hist_bins << "\n\n";
  o << "[ilac]\n"
    << "grid_lo = " << format_double(ilac.grid_lo) << "\n"
    << "grid_hi = " << format_double(ilac.grid_hi) << "\n"
    << "grid_points = " << ilac.grid_points << "\n\n";
  o << "[rho]\n"
    << "rectangles = " << join(rho.rectangles) << "\n"
    << "random_rectangles = " << rho.random_rectangles << "\n"
    << "atom_limit = " << rho.atom_limit << "\n\n";
  o << "[corners]\n"
    << "bands_plus = " << corners.bands_plus << "\n"
    << "bands_minus = " << corners.bands_minus << "\n"
    << "a_grid = " << join(corners.a_grid) << "\n\n";
  o << "[tails]\n"
    << "measure = " << tails.measure << "\n"
    << "edge = " << opt(tails.edge) << "\n"
    << "side = " << to_string(tails.side) << "\n"
    << "deltas = " << join(tails.deltas) << "\n"
    << "bandwidth = " << opt(tails.bandwidth) << "\n\n";
  o << "[verify21]\n"
    << "a_grid = " << join(verify21.a_grid) << "\n"
    << "e_plus = " << opt(verify21.e_plus) << "\n"
    << "e_minus = " << opt(verify21.e_minus) << "\n"
    << "e_plus_top = " << opt(verify21.e_plus_top) << "\n"
    << "e_minus_top = " << opt(verify21.e_minus_top) << "\n\n";
  o << "[verify31]\n"
    << "deltas = " << join(verify31.deltas) << "\n\n";
  o << "[covariance]\n"
    << "dimension = " << covariance.dimension << "\n"
    << "modulus = " << covariance.modulus << "\n"
    << "trials = " << covariance.trials << "\n";
  return o.str();
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  using J = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? J(*v) : J(nullptr); };
  J rects = J::array();
  for (const auto& r : rho.rectangles) rects.push_back({r.plus_lo, r.plus_hi, r.minus_lo, r.minus_hi});
  J j;
  j["kind"] = to_string(kind);
  j["seed"] = seed;
  j["realizations"] = realizations;
  j["box"] = {{"dimension", box.dimension},
              {"side_length", box.side_length},
              {"boundary", to_string(box.boundary)},
              {"max_sites", box.max_sites}};
  j["potential"] = {{"kind", to_string(potential.kind)}, {"a1", potential.a1}, {"b1", potential.b1},
                    {"a2", potential.a2},                {"b2", potential.b2}, {"v0", potential.v0},
                    {"v1", potential.v1},                {"p", opt(potential.p)},
                    {"allow_point_mass", potential.allow_point_mass}};
  j["eigen"] = {{"symmetry_tolerance", eigen.symmetry_tolerance}, {"max_sweeps", eigen.max_sweeps}};
  j["dos"] = {{"estimator", to_string(dos.estimator)},
              {"site", dos.site ? J(*dos.site) : J(nullptr)},
              {"hist_lo", dos.hist_lo},
              {"hist_hi", dos.hist_hi},
              {"hist_bins", dos.hist_bins}};
  j["ilac"] = {{"grid_lo", ilac.grid_lo}, {"grid_hi", ilac.grid_hi}, {"grid_points", ilac.grid_points}};
  j["rho"] = {{"rectangles", rects}, {"random_rectangles", rho.random_rectangles}, {"atom_limit", rho.atom_limit}};
  j["corners"] = {{"bands_plus", corners.bands_plus}, {"bands_minus", corners.bands_minus},
                  {"a_grid", corners.a_grid}};
  j["tails"] = {{"measure", tails.measure}, {"edge", opt(tails.edge)}, {"side", to_string(tails.side)},
                {"deltas", tails.deltas},   {"bandwidth", opt(tails.bandwidth)}};
  j["verify21"] = {{"a_grid", verify21.a_grid},
                   {"e_plus", opt(verify21.e_plus)},
                   {"e_minus", opt(verify21.e_minus)},
                   {"e_plus_top", opt(verify21.e_plus_top)},
                   {"e_minus_top", opt(verify21.e_minus_top)}};
  j["verify31"] = {{"deltas", verify31.deltas}};
  j["covariance"] = {{"dimension", covariance.dimension},
                     {"modulus", covariance.modulus},
                     {"trials", covariance.trials}};
  return j;
}

void ExperimentConfig::validate() const {
  try {
    if (realizations == 0) throw ConfigError("realizations must be at least 1");
    if (workers == 0) throw ConfigError("workers must be at least 1");
    if (kind != ExperimentKind::Covariance) {
      box.validate();
      potential.validate();
    }
    if (eigen.max_sweeps < 1) throw ConfigError("eigen.max_sweeps must be positive");
    if (!(eigen.symmetry_tolerance >= 0.0)) throw ConfigError("eigen.symmetry_tolerance must be nonnegative");
    if (!(dos.hist_lo < dos.hist_hi) || dos.hist_bins == 0) throw ConfigError("dos histogram range is empty");
    if (dos.site && *dos.site >= box.site_count()) throw ConfigError("dos.site lies outside the box");
    if (!(ilac.grid_lo <= ilac.grid_hi) || ilac.grid_points == 0) throw ConfigError("ilac grid is empty");
    for (const auto& r : rho.rectangles)
      if (!(r.plus_lo <= r.plus_hi && r.minus_lo <= r.minus_hi)) throw ConfigError("rho rectangle with lo > hi");
    if (kind == ExperimentKind::Rho && rho.rectangles.empty() && rho.random_rectangles == 0)
      throw ConfigError("rho needs rectangles or random_rectangles");
    if (!corners.bands_plus.empty()) ExactBands::parse(corners.bands_plus);
    if (!corners.bands_minus.empty()) ExactBands::parse(corners.bands_minus);
    if (corners.a_grid.empty()) throw ConfigError("corners.a_grid is empty");
    for (const auto& a : corners.a_grid)
      if (parse_rational(a) <= 0) throw ConfigError("corners.a_grid values must be positive");
    if (tails.measure != "dos_plus" && tails.measure != "dos_minus" && tails.measure != "ilac")
      throw ConfigError("tails.measure must be dos_plus, dos_minus or ilac");
    if (!tails.deltas.empty()) validate_delta_grid(tails.deltas);
    if (tails.bandwidth && !(*tails.bandwidth > 0.0)) throw ConfigError("tails.bandwidth must be positive");
    for (double a : verify21.a_grid)
      if (!(a > 0.0)) throw ConfigError("verify21.a_grid values must be positive");
    if (!verify31.deltas.empty()) validate_delta_grid(verify31.deltas);
    if (kind == ExperimentKind::Covariance) {
      if (covariance.trials == 0) throw ConfigError("covariance.trials must be positive");
      if (covariance.dimension < 1 || covariance.dimension > 3 || covariance.modulus < 3)
        throw ConfigError("covariance torus needs 1 <= dimension <= 3 and modulus >= 3");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return kind == o.kind && seed == o.seed && realizations == o.realizations && workers == o.workers &&
         out == o.out && box == o.box && potential == o.potential &&
         eigen.symmetry_tolerance == o.eigen.symmetry_tolerance && eigen.max_sweeps == o.eigen.max_sweeps &&
         dos == o.dos && ilac == o.ilac && rho == o.rho && corners == o.corners && tails == o.tails &&
         verify21 == o.verify21 && verify31 == o.verify31 && covariance == o.covariance;
}

}  // namespace ilac
