#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rootsa/errors.hpp"
#include "rootsa/diagnostics.hpp"
#include "rootsa/oracle.hpp"
#include "rootsa/problems.hpp"
#include "rootsa/solver.hpp"

namespace rootsa::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kAuditViolation = 3, kRuntimeFailure = 4 };

/// Malformed or inconsistent configuration; maps to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class Algorithm { vanilla, rootsa, rootsa_restart };
std::string to_string(Algorithm a);

struct Theta0Spec {
  enum class Kind { zero, constant, fixed_point_offset, explicit_values } kind = Kind::zero;
  double value = 0.0;
  /// fixed_point_offset only: add value * 1 ("constant") or value * (+1, -1, +1, ...) ("alternating").
  std::string pattern = "constant";
  std::vector<double> values;
};

struct TuningSpec {
  /// "auto" picks the family rule; "multistep" forces the m-step rule.
  std::string rule = "auto";
  std::optional<double> alpha;
  std::optional<long> burn_in;
  std::optional<int> restarts;
  std::optional<long> m;
  double c_step = 0.0;  // 0 = rule default
  double c_burn = 0.0;
  double c_epoch = 2.0;
  double lipschitz = 1.0;
};

struct VanillaSpec {
  std::string schedule = "rescaled_linear";  // rescaled_linear | constant | polynomial
  double alpha = 0.1;
  double c = 1.0;
  double omega = 0.75;
};

struct EstimateSpec {
  long cov_samples = 100000;
  long mc = 10000;
  std::uint64_t seed = 7;
  bool rate = true;
  std::string run_csv;
  double hn_constant = 1.0;
};

struct AuditSpec {
  long pairs = 1000;
  int mixing_cap = 10000;
  std::uint64_t seed = 11;
};

struct DryRunSpec {
  double scale = 1.0;
  double exponent = -0.5;
};

struct ExperimentConfig {
  nlohmann::json raw;
  Problem problem;
  std::string problem_id;
  Algorithm algorithm = Algorithm::rootsa;
  TuningSpec tuning;
  VanillaSpec vanilla;
  std::vector<long> horizons;
  std::vector<std::uint64_t> seeds;
  double delta = 0.1;
  std::string norm = "natural";
  std::vector<long> checkpoints;
  Theta0Spec theta0;
  OracleMode oracle = OracleMode::generative;
  EstimateSpec estimate;
  AuditSpec audit;
  DryRunSpec dry_run;
  int workers = 1;
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const nlohmann::json& j);
/// Parse errors report line and column.
ExperimentConfig load_config(const std::string& path);

struct ResolvedTuning {
  double alpha = 0.0;
  long burn_in = 0;
  int restarts = 0;
  std::vector<long> checkpoints;
  nlohmann::json echo;  // formula, constants and plugged-in quantities
};

ResolvedTuning resolve_tuning(const ExperimentConfig& config, long n);
NormSpec resolve_norm(const ExperimentConfig& config);
Vector resolve_theta0(const ExperimentConfig& config, const std::optional<Vector>& theta_star);

struct RunRecord {
  std::string problem_id;
  std::string algorithm;
  std::uint64_t seed = 0;
  long n = 0;
  double alpha = 0.0;
  long burn_in = 0;
  int restarts = 0;
  long samples_used = 0;
  double final_defect = 0.0;
  std::optional<double> final_error;
  bool diverged = false;
  std::string message;
  double wall_ms = 0.0;
  std::vector<CheckpointRecord> series;
};

/// One run per (seed, n), sorted by (seed, n) regardless of worker count.
std::vector<RunRecord> execute_batch(const ExperimentConfig& config, int workers, bool dry_run);

/// Fixed column order, floats with 17 significant digits. Wall time is left
/// out so files are byte-reproducible.
void write_records_csv(const std::string& path, const std::vector<RunRecord>& records);
void write_checkpoints_csv(const std::string& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> read_records_csv(const std::string& path);

struct CommandOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<int> workers;
  std::uint64_t seed_offset = 0;
  bool dry_run = false;
};

int cmd_run(const CommandOptions& options);
int cmd_sweep(const CommandOptions& options);
int cmd_audit(const CommandOptions& options);
int cmd_estimate(const CommandOptions& options);

// Pieces of the commands exposed for tests -------------------------------------------

struct SweepRow {
  long n = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double slope = 0.0;
};

/// Per-horizon mean final defect across seeds and the log-log slope.
SweepReport summarize_sweep(const std::vector<RunRecord>& records);

struct AuditCheck {
  std::string name;
  std::string status;  // pass | fail | skip
  std::vector<std::pair<std::string, std::string>> fields;
};

std::vector<AuditCheck> audit_problem(const ExperimentConfig& config);
std::string format_audit(const std::vector<AuditCheck>& checks);

struct EstimateRow {
  long n = 0;
  double predicted_leading = 0.0;
  std::optional<double> s_star;
  std::optional<double> higher_order;
  std::optional<double> measured;
  std::optional<double> ratio;
};

struct EstimateReport {
  GaussianComplexity complexity;
  GaussianComplexity resolvent;
  double b_star = 0.0;
  std::vector<EstimateRow> rows;
  nlohmann::json notes = nlohmann::json::object();
};

EstimateReport estimate_bounds(const ExperimentConfig& config, const std::vector<RunRecord>* measured);

}  // namespace rootsa::cli
