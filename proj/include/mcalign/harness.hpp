#pragma once

#include "mcalign/generators.hpp"
#include "mcalign/io.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mcalign {

inline constexpr const char* kLibraryVersion = "0.1.0";
/// Environment variable naming the default output directory.
inline constexpr const char* kOutputDirEnv = "ALIGN_OUTPUT_DIR";

enum class ExperimentId { ExactRecovery, PplSweep, RateDiagnostics, ThresholdBound, LowerBound };

std::string to_string(ExperimentId id);
std::optional<ExperimentId> experiment_from_string(const std::string& name);

/// Parsed experiment configuration. `echo` holds the effective JSON after
/// defaults and overrides so a manifest can reproduce the run.
struct ExperimentConfig {
  ExperimentId experiment = ExperimentId::ExactRecovery;
  std::optional<std::string> instance_file;
  GeneratorSpec generator;
  std::vector<std::uint64_t> seeds;
  std::vector<long> m_grid;
  std::vector<double> t_grid;  ///< empty selects the automatic threshold
  std::vector<double> eps_grid;
  std::vector<int> n_grid;     ///< exact-recovery / theorem2-check sizes
  double delta = 0.05;
  bool epsilon_known = true;
  bool adversarial = false;    ///< theorem2-check: opposed actions on clipped states
  CompletionRule completion_rule = CompletionRule::Ascending;
  double tol_alpha = kDefaultTolAlpha;
  double tol_beta = kDefaultTolBeta;
  std::string output_dir;
  Json echo;
};

/// Applies `key=value` to a JSON object; dotted keys address nested
/// objects. The value is parsed as JSON when possible, else kept as a string.
void apply_override(Json& config, const std::string& assignment);

/// Validates and fills defaults. Throws ConfigError naming the key at fault.
ExperimentConfig parse_config(const Json& config);

/// Reads a JSON config file (ConfigError on missing or malformed files).
Json load_config_file(const std::string& path);

struct RunReport {
  int exit_code = 0;
  std::string summary_line;
  Json summary;
};

/// Runs the experiment and writes manifest.json, results.json and
/// <experiment>.csv under config.output_dir. Module failures produce
/// error.json and exit code 1.
RunReport run(const ExperimentConfig& config);

/// CSV text for each experiment (exposed for byte-level determinism tests).
std::string run_to_csv(const ExperimentConfig& config, Json* summary, std::string* summary_line);

/// Threshold clipping exactly the `clipped` lowest-occupancy states: the
/// midpoint between the clipped-th and (clipped+1)-th smallest mu.
double midpoint_threshold(const Vector& mu, int clipped);

/// Deterministic selection of a low-occupancy instance for threshold
/// experiments: generates from consecutive seeds until one has a single
/// state below the midpoint threshold and a restricted block whose
/// certificate clears (min_alpha, min_beta).
struct ThresholdInstance {
  GeneratedInstance instance;
  double t = 0.0;
  FriendlinessCertificate restricted_certificate;
  std::uint64_t seed = 0;
};
ThresholdInstance find_threshold_instance(const GeneratorSpec& spec, std::uint64_t first_seed,
                                          double min_alpha, double min_beta, int max_tries = 1000);

}  // namespace mcalign
