#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ilaclab/config.hpp"
#include "ilaclab/error.hpp"
#include "ilaclab/experiment.hpp"

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> realizations;
  std::optional<std::string> out;
  bool print_config = false;
  bool quiet = false;
};

const char* kind_help(ilac::ExperimentKind k) {
  using K = ilac::ExperimentKind;
  switch (k) {
    case K::Dos: return "density of states of H+ and H- (atoms, histogram)";
    case K::Ilac: return "absorption curve A(E) on an energy grid, by two routes";
    case K::Rho: return "correlation measure on rectangles against both densities of states";
    case K::Corners: return "good-corner classification, strip covers and corner bounds";
    case K::Tails: return "tail masses near a band edge and stretched-exponential fit";
    case K::Verify21: return "band-bottom inequality for the absorption curve";
    case K::Verify31: return "absorption tails at external and internal band edges";
    case K::Covariance: return "exact trace identities for covariant families on a torus";
  }
  return "";
}

int run(ilac::ExperimentKind kind, const Overrides& o) {
  ilac::ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = ilac::ExperimentConfig::load(o.config_path);
  cfg.kind = kind;
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.realizations) cfg.realizations = *o.realizations;
  if (o.out) cfg.out = *o.out;
  cfg.validate();
  if (o.print_config) {
    std::cout << cfg.serialize();
    return ilac::kExitOk;
  }
  const auto result = ilac::run_experiment(cfg);
  if (!o.quiet) std::cout << result.summary.dump(2) << "\n";
  if (result.status == ilac::kExitVerification)
    std::cerr << "ilaclab: a verification check failed; see " << cfg.out << "/manifest.json\n";
  return result.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Disordered lattice spectra: densities of states, correlation measure and absorption curves"};
  app.require_subcommand(1);
  Overrides o;
  std::optional<ilac::ExperimentKind> chosen;

  const ilac::ExperimentKind kinds[] = {ilac::ExperimentKind::Dos,      ilac::ExperimentKind::Ilac,
                                        ilac::ExperimentKind::Rho,      ilac::ExperimentKind::Corners,
                                        ilac::ExperimentKind::Tails,    ilac::ExperimentKind::Verify21,
                                        ilac::ExperimentKind::Verify31, ilac::ExperimentKind::Covariance};
  for (auto kind : kinds) {
    auto* sub = app.add_subcommand(ilac::to_string(kind), kind_help(kind));
    sub->add_option("--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--workers", o.workers, "worker threads (results do not depend on it)");
    sub->add_option("--realizations", o.realizations, "number of disorder realizations");
    sub->add_option("--out", o.out, "output directory");
    sub->add_flag("--print-config", o.print_config, "print the resolved config and exit");
    sub->add_flag("--quiet", o.quiet, "do not print the summary");
    sub->callback([&chosen, kind] { chosen = kind; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ilac::kExitOk : ilac::kExitUsage;
  }

  try {
    return run(*chosen, o);
  } catch (const ilac::RealizationError& e) {
    std::cerr << "ilaclab: numerical failure: " << e.what() << "\n";
    return ilac::kExitNumerical;
  } catch (const ilac::ConvergenceError& e) {
    std::cerr << "ilaclab: numerical failure: " << e.what() << "\n";
    return ilac::kExitNumerical;
  } catch (const ilac::ConfigError& e) {
    std::cerr << "ilaclab: config error: " << e.what() << "\n";
    return ilac::kExitUsage;
  } catch (const ilac::InvalidArgument& e) {
    std::cerr << "ilaclab: invalid input: " << e.what() << "\n";
    return ilac::kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "ilaclab: " << e.what() << "\n";
    return ilac::kExitUsage;
  }
}
