#pragma once

// Experiment configuration, validation and orchestration behind the `emhd`
// command-line tool.

#include "emhd/evolution.hpp"
#include "emhd/verification.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace emhd {

inline constexpr int kConfigFormatVersion = 1;

enum class ExperimentKind { Simulate, Picard, MonteCarlo, Verify, Inflate };

ExperimentKind parse_kind(const std::string& name);
std::string to_string(ExperimentKind k);

struct InitialSection {
  std::string type = "random";  // random | beltrami | shell | zero | snapshot
  double decay = 2.0;
  double damping = 0.0;      // extra e^{-(alpha + delta + damping) Lambda^s} on random data
  double gevrey_norm = 1e-2;  // rescale to this norm at alpha + delta; 0 keeps the amplitude
  double amplitude = 1.0;
  int shell = 1;
  int helicity = 1;
  int band_limit = 0;  // 0 keeps every mode
  std::string file;
};

struct PathSection {
  double dt = 1e-3;
  bool conditioned = true;
};

struct SimulateSection {
  std::string system = "rpde";  // rpde | spde
  Scheme scheme = Scheme::ETDRK2;
  double dt = 1e-2;
  double T = 0.1;
  int output_every = 1;
  Evaluator evaluator = Evaluator::Direct;
  double drop_tol = 0.0;
  std::vector<double> snapshot_times;
};

struct PicardSection {
  double T = 0.05;
  int n_iter = 50;
  int quad_points = 16;
  double tol = 1e-12;
  bool compare_etdrk2 = true;
};

struct MonteCarloSection {
  double alpha = 1.0;
  double beta = 1.0;
  double mu = 1.0;
  std::size_t n_paths = 100000;
  double dt = 1e-2;
  double horizon = 25.0;
  bool bridge_correction = true;
};

struct MonotonicitySection {
  int n_paths = 10;
  double T = 1.0;
  double dt = 0.025;
  double margin = 2.0;
  double data_fraction = 0.1;  // U0 norm as a fraction of the smallness bound
  double drop_tol = 1e-11;
  int c_hat_fields = 20;
  std::vector<int> c_hat_N{6, 8};
  double decay = 2.0;
  double damping = 1.0;
};

struct VerifySection {
  std::vector<std::string> checks{"triangle", "propagator", "bilinear", "monotonicity"};
  std::size_t triangle_samples = 1000000;
  std::vector<double> triangle_s{0.76, 0.875, 0.9, 1.0};
  int propagator_N = 32;
  std::vector<std::array<double, 4>> propagator_matrix;  // (sigma, s, beta, mu); empty uses the config
  BilinearEnsemble bilinear;
  MonotonicitySection monotonicity;
};

struct InflateSection {
  double T = 0.1;
  double dt = 5e-3;
  int n_paths = 2;
  Scheme scheme = Scheme::ExponentialIto;
  Evaluator evaluator = Evaluator::Fft;
  int output_every = 1;
};

struct ExperimentConfig {
  int format_version = kConfigFormatVersion;
  ExperimentKind kind = ExperimentKind::Simulate;
  bool exploratory = false;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::filesystem::path output_dir = "out";
  int N = 8;
  double lattice_scale = 1.0;
  GevreyParams gevrey;
  double mu = 1.0;
  NoiseVariant variant = NoiseVariant::Standard;
  InitialSection initial;
  PathSection path;
  SimulateSection simulate;
  PicardSection picard;
  MonteCarloSection montecarlo;
  VerifySection verify;
  InflateSection inflate;

  NoiseModel noise() const { return NoiseModel::for_variant(variant, mu, gevrey.s); }
};

/// Parses a config document. Missing keys take defaults; unknown keys and
/// wrong types throw ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Fully resolved config. Output directory and thread count are left out:
/// neither changes any emitted number.
nlohmann::ordered_json canonical_json(const ExperimentConfig& c);

/// FNV-1a of the canonical dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& c);

struct Violation {
  std::string field;
  std::string message;
  bool fatal = true;
};

/// Empty iff the config is usable. Theorem-range violations are downgraded to
/// warnings (fatal = false) when `exploratory` is set.
std::vector<Violation> validate_config(const ExperimentConfig& c);

struct RunResult {
  std::string config_hash;
  int exit_code = 0;
  double wall_time = 0.0;
  nlohmann::ordered_json summary;
  std::vector<std::filesystem::path> artifacts;
};

/// Validates, runs the experiment and writes its outputs atomically under
/// output_dir. Module errors propagate; verify runs whose checks fail
/// return exit code 4.
RunResult run_experiment(const ExperimentConfig& c);

/// Process exit code for an exception: 2 config/format, 3 numerical,
/// 4 assertion, 1 otherwise.
int exit_code_for(const std::exception& e);

/// {"error": kind, "message": ..., "exit_code": ...}.
nlohmann::ordered_json error_json(const std::exception& e);

/// Initial field described by the config.
Field make_initial_field(const ExperimentConfig& c);

struct MonotonicityRun {
  double c_hat = 0.0;
  InequalityReport c_hat_report;
  double initial_norm = 0.0;
  std::vector<InequalityReport> reports;  // one per path; failing paths carry the violation
  std::vector<Trajectory> trajectories;
};

/// Empirical constant from the damped ensemble at radius alpha + delta and
/// shift alpha, random U0 at data_fraction of the smallness bound, then the
/// decay check on conditioned paths derive_seed(seed, 1000 + i).
MonotonicityRun run_monotonicity(const ExperimentConfig& c);

}  // namespace emhd
