#pragma once

#include "subspace_perturb/matrix.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace subspace_perturb {

enum class ExperimentKind {
  covariance,
  lowrank_recovery,
  omnibus,
  entrywise,
  decomposition_suite,
  norm_suite
};

std::string_view to_string(ExperimentKind kind);
ExperimentKind parse_experiment(std::string_view name);

enum class OutputFormat { csv, json };
std::string_view to_string(OutputFormat f);
OutputFormat parse_output_format(std::string_view name);

struct CovarianceParams {
  std::vector<Index> dims{100, 400, 1600};
  Index r = 3;
  double spike_scale = 1.0;  // lambda_k = spike_scale * d / r
  double c = 1.0;
  double n_factor = 20.0;    // n = n_factor * d
};

struct LowRankRecoveryParams {
  std::vector<std::array<Index, 2>> shapes{{100, 2000}};
  Index r = 3;
  double signal_scale = 1.0;  // sigma_k = signal_scale * p2 / sqrt(p1)
  double noise_scale = 1.0;   // E_ij ~ N(0, noise_scale^2)
};

struct OmnibusParams {
  std::vector<Index> sizes{250, 500, 1000, 2000};
  Matrix lambda = (Matrix(2, 2) << 0.5, 0.2, 0.2, 0.5).finished();
  std::vector<double> rho{0.0, 0.5};
};

struct EntrywiseParams {
  Index p = 50;
  std::vector<double> eigenvalues{10.0, -8.0};
  // ||E||_inf = fraction * |lambda_r|; 0.25 is the precondition boundary.
  std::vector<double> noise_fractions{0.25, 0.1};
};

struct DecompositionSuiteParams {
  std::vector<std::array<Index, 2>> shapes{{60, 40}};
  Index r = 3;
  double sigma_r = 10.0;          // sigma_k = sigma_r * (r - k + 1)
  double noise_ratio = 0.05;      // ||E||_2 = noise_ratio * sigma_r
  std::vector<double> tail_ratios{0.0, 0.01};  // sigma_{r+1..} = tail_ratio * sigma_r
  double symmetric_noise_fraction = 0.2;       // ||E_sym||_inf / |lambda_r|
  double grid_step = 0.05;
};

struct NormSuiteParams {
  Index max_dim = 30;
  Index max_frame_rank = 6;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::norm_suite;
  std::uint64_t base_seed = 20240601;
  Index replicates = 1;
  std::optional<std::string> output_path;
  OutputFormat output_format = OutputFormat::csv;
  unsigned threads = 0;  // 0 = hardware concurrency

  CovarianceParams covariance;
  LowRankRecoveryParams lowrank_recovery;
  OmnibusParams omnibus;
  EntrywiseParams entrywise;
  DecompositionSuiteParams decomposition_suite;
  NormSuiteParams norm_suite;

  static Index default_replicates(ExperimentKind kind);
  // Defaults for `kind`, including its replicate count.
  static ExperimentConfig defaults(ExperimentKind kind);
};

/// Parses a config document. Unknown keys at any level raise ConfigError.
/// `expected` (from the CLI subcommand) fills in or must agree with the
/// document's "experiment" key.
ExperimentConfig parse_config(const nlohmann::json& doc,
                              std::optional<ExperimentKind> expected = std::nullopt);
ExperimentConfig load_config(const std::filesystem::path& path,
                             std::optional<ExperimentKind> expected = std::nullopt);
void validate_config(const ExperimentConfig& config);

enum class RowStatus { checked, precondition_failed };
std::string_view to_string(RowStatus s);
RowStatus parse_row_status(std::string_view name);

using Metrics = std::vector<std::pair<std::string, double>>;

struct ReplicateRow {
  std::string group;
  Index replicate = 0;
  std::uint64_t seed = 0;
  RowStatus status = RowStatus::checked;
  bool violated = false;
  Metrics metrics;

  double metric(const std::string& name) const;
};

struct AggregateRow {
  std::string group;
  std::string metric;
  double value = 0.0;
};

struct ExperimentReport {
  std::string experiment;
  std::uint64_t base_seed = 0;
  Index replicates = 0;
  std::vector<ReplicateRow> rows;
  std::vector<AggregateRow> aggregates;
  Index violation_count = 0;

  std::optional<double> aggregate(const std::string& group, const std::string& metric) const;
  std::vector<const ReplicateRow*> rows_in(const std::string& group) const;
};

ExperimentReport run_covariance(const ExperimentConfig& config);
ExperimentReport run_lowrank_recovery(const ExperimentConfig& config);
ExperimentReport run_omnibus(const ExperimentConfig& config);
ExperimentReport run_entrywise(const ExperimentConfig& config);
ExperimentReport run_decomposition_suite(const ExperimentConfig& config);
ExperimentReport run_norm_suite(const ExperimentConfig& config);
ExperimentReport run_experiment(const ExperimentConfig& config);

/// Least-squares slope of log(y) against log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);
double median(std::vector<double> values);
/// Linear-interpolation quantile, q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Tidy CSV: section,group,replicate,seed,status,metric,value.
void write_report_csv(std::ostream& out, const ExperimentReport& report);
nlohmann::ordered_json report_to_json(const ExperimentReport& report);
void write_report(const ExperimentReport& report, OutputFormat format, std::ostream& out);
/// Atomic: writes a sibling temp file, then renames over `path`.
void write_report(const ExperimentReport& report, OutputFormat format,
                  const std::filesystem::path& path);

ExperimentReport read_report_csv(std::istream& in);
ExperimentReport report_from_json(const nlohmann::ordered_json& doc);

}  // namespace subspace_perturb
