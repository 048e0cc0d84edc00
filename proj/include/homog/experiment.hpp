#pragma once

// Declarative experiments: JSON configuration, the simulate -> lift -> coeffs
// -> compare -> checks pipeline, and check records.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "homog/coeffs.hpp"
#include "homog/ensemble.hpp"
#include "homog/fastslow.hpp"
#include "homog/maps.hpp"

namespace homog {

/// Schema or range violation; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numeric failure inside a named check.
class CheckError : public std::runtime_error {
 public:
  CheckError(std::string check, const std::string& what)
      : std::runtime_error(check + ": " + what), check_(std::move(check)) {}
  const std::string& check() const { return check_; }

 private:
  std::string check_;
};

struct Tolerances {
  double ks = 0.02;           // ks-normal
  double ks_sde = 0.03;       // sde-limit, sde-marginals
  double ks_sup = 0.05;       // sde-sup
  double sigmas = 3.0;        // wip-mean, wip-cov
  double moment_factor = 2.0;
  double centering = 1e-3;
  double coeffs = 1e-2;
  double consistency = 1e-12;
  double besov_spread = 3.0;
  double drift = 1e-2;
};

struct BesovConfig {
  double alpha = 0.4;
  double q = 8.0;
  std::size_t n = 1024;
  std::size_t paths = 100;
  std::size_t quadrature = 256;
  std::size_t pairs = 1000;
  double beta = 0.5;
  std::string source = "lift";  // "lift" or "brownian"
};

struct ExperimentConfig {
  double gamma = 0.0;
  /// gamma_n = gamma + family_c * n^{-family_rate}
  double family_c = 0.0;
  double family_rate = 1.0;
  MeasureSpec measure = MeasureSpec::lebesgue();
  std::size_t d = 1;
  Vec xi;
  nlohmann::json field;  // resolved field specification
  bool center = true;
  std::vector<std::size_t> n;  // n.front() is the primary level
  std::size_t samples = 1000;
  std::size_t orbit_length = 10000000;
  std::int64_t L = B2Options::kDefaultTruncation;
  bool auto_stop = true;
  double q = 2.0;
  double p = 2.5;
  std::size_t moment_samples = 1000;
  std::size_t consistency_samples = 4;
  std::size_t em_steps = 2000;
  std::uint64_t seed = 1;
  double probe_lo = -2.0;
  double probe_hi = 2.0;
  std::size_t probe_points = 33;
  std::vector<std::string> checks;
  std::optional<double> target_mean;
  std::optional<double> target_variance;
  std::optional<double> expected_B1;
  std::optional<double> expected_B2;
  BesovConfig besov;
  Tolerances tol;
  std::string out_dir = "out";
  std::size_t path_count = 8;

  /// The configuration with every default written out.
  nlohmann::json resolved;

  MapParams map_at(std::size_t n_level) const;
  MapParams limit_map() const { return MapParams(gamma); }
};

/// All check names understood by the runner, in execution order.
const std::vector<std::string>& known_checks();

ExperimentConfig parse_config(const nlohmann::json& doc);
/// Reads and parses a file; JSON syntax errors are reported with line and
/// column.
ExperimentConfig load_config(const std::string& path);

/// Product field h (x) v (+ g (x) u) described by a field specification.
ProductField build_field(const nlohmann::json& field_spec, std::size_t d);

enum class Stage { Simulate, Lift, Coeffs, Compare, Checks, Besov };

struct RunOptions {
  std::size_t threads = 1;
  std::optional<std::uint64_t> seed_override;
  std::vector<std::string> check_filter;
  std::optional<std::string> out_dir;
  bool timing = false;
  bool write_files = true;
};

struct CheckRecord {
  std::string check;
  nlohmann::json params;
  double statistic = 0.0;
  double target = 0.0;
  double tol = 0.0;
  bool pass = false;
  std::optional<double> runtime_ms;
};

struct RunResult {
  std::vector<CheckRecord> records;
  bool all_pass() const;
};

RunResult run_experiment(ExperimentConfig config, Stage stage, const RunOptions& options);

/// Fast-slow ensemble over independent random starts: sample s draws its
/// orbit from the (seed, InitialCondition, s) stream. The first `keep_paths`
/// samples retain their full paths.
PathEnsemble fast_slow_ensemble(const ProductField& field, std::span<const double> xi,
                                const MapParams& params, const MeasureSpec& measure,
                                std::size_t n, std::size_t samples, std::uint64_t seed,
                                std::size_t threads, std::size_t keep_paths = 0);

}  // namespace homog
