#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ilaclab/config.hpp"
#include "ilaclab/spectral.hpp"

namespace ilac {

/// Exit statuses shared by the CLI and run_experiment.
enum ExitStatus : int { kExitOk = 0, kExitUsage = 1, kExitNumerical = 2, kExitVerification = 3 };

/// Everything one disorder realization contributes. Numeric series are
/// averaged across included realizations in index order; atoms are pooled.
struct RealizationResult {
  std::uint64_t index = 0;
  /// Some eigenvalue left the almost-sure bands (only acted on by kinds whose
  /// checks require in-band spectra).
  bool excluded = false;
  std::map<std::string, std::vector<double>> series;
  std::vector<Atom1D> plus_atoms;
  std::vector<Atom1D> minus_atoms;
  std::vector<Atom2D> rho_atoms;

  std::size_t eigenvalues = 0;  // per operator
  std::size_t out_of_band_plus = 0;
  std::size_t out_of_band_minus = 0;
  double min_plus = 0.0, max_plus = 0.0;
  double min_minus = 0.0, max_minus = 0.0;
  /// Per-realization inequality failures found by the kind's checks.
  std::size_t violations = 0;
};

/// A batch of realizations computed under one configuration.
struct PartialResult {
  std::string fingerprint;
  std::vector<RealizationResult> realizations;
};

/// Serialized config without the fields that may not influence data
/// (worker count and output directory).
std::string config_fingerprint(const ExperimentConfig& config);

/// Realizations [first, first + count) of `config`, run on config.workers threads.
PartialResult run_realizations(const ExperimentConfig& config, std::uint64_t first, std::uint64_t count);

/// Concatenates partials and sorts by realization index. Throws
/// InvalidArgument on differing fingerprints or duplicate indices.
PartialResult merge_results(std::span<const PartialResult> parts);

/// Index-ordered mean of one series over the non-excluded realizations.
std::vector<double> mean_series(const PartialResult& merged, const std::string& name, bool skip_excluded);

struct RunResult {
  int status = kExitOk;
  nlohmann::ordered_json manifest;
  /// Kind-specific numbers that also appear in the data files.
  nlohmann::ordered_json summary;
  /// Data file names relative to config.out, sorted.
  std::vector<std::string> files;
};

/// Runs the whole experiment and writes every output under config.out.
/// Throws ConfigError, RealizationError or std::runtime_error (I/O).
RunResult run_experiment(const ExperimentConfig& config);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

}  // namespace ilac
