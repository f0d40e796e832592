#pragma once

// Configuration, orchestration and report emission.
//
// raw_signals:          fuse -> filter -> segment -> features -> stats
// precomputed_features: feature CSV -> stats
//
// Stats always run on the feature table as serialized to CSV, so a
// precomputed run over a raw run's features.csv reproduces its stats.

#include "tugfall/features.hpp"
#include "tugfall/segmentation.hpp"
#include "tugfall/stats.hpp"
#include "tugfall/table.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tugfall {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitPartial = 3;

inline constexpr const char* kToolVersion = "1.0.0";

enum class Mode { raw_signals, precomputed_features };

struct FilterConfig {
  bool enabled = true;
  double cutoff_hz = 99.0;
  int order = 4;
};

struct StatsOptions {
  long bootstrap_resamples = 2000;
  std::uint64_t seed = 20170814;
  double alpha = 0.05;
  /// Columns tested and ROC-analysed; empty means every column.
  std::vector<std::string> variables;
  /// Columns that also get Welch t tests.
  std::vector<std::string> t_test_variables;
  /// Columns that get roc_points_* and sens_spec_* files; empty means the
  /// default fusion and reference set, where present.
  std::vector<std::string> plot_variables;
  std::vector<FusionSpec> fusions{feats_avg_preset(), dists_avg_preset()};
};

struct PipelineConfig {
  std::filesystem::path dataset_root;
  Mode mode = Mode::raw_signals;
  double sampling_rate_hz = 200.0;
  FilterConfig filter;
  SegmentationParams segmentation;
  std::optional<std::filesystem::path> override_file;
  FeatureOptions features;
  StatsOptions stats;
  /// precomputed_features: feature CSV, relative to dataset_root.
  std::string features_file = "features.csv";
  TableSchema schema;
  std::filesystem::path output_dir;
  /// The configuration document as given, embedded in every manifest.
  nlohmann::json source = nlohmann::json::object();
};

/// Relative paths are resolved against `base_dir`.
PipelineConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::filesystem::path& path);

/// Fully resolved configuration, including defaults.
nlohmann::json resolved_config(const PipelineConfig& config);

/// 16 hex digits (FNV-1a 64) of the resolved configuration.
std::string config_hash(const PipelineConfig& config);

/// Checks mode-specific inputs exist and parameters are valid; throws
/// ConfigError or ValidationError. Writes nothing.
void validate_config(const PipelineConfig& config);

struct SubjectOutcome {
  std::string subject_id;
  bool ok = false;
  std::optional<SegmentationSource> segmentation_source;
  std::string error;
  std::vector<SampleRange> candidates;
};

struct StatsReport {
  std::vector<GroupComparison> comparisons;
  std::vector<RocResult> rocs;
  /// Fusions skipped because a member column was missing.
  std::vector<std::string> notes;
};

/// Adds configured fusion columns to `table` and runs every test and ROC.
StatsReport analyze_table(CohortTable& table, const StatsOptions& options);

void write_stats_outputs(const std::filesystem::path& dir, const StatsReport& report, const CohortTable& table,
                         const StatsOptions& options, const std::string& hash);

nlohmann::json segmentation_json(const std::string& subject_id, const TrialSegmentation& seg);

struct RunResult {
  int exit_code = kExitOk;
  std::filesystem::path output_dir;
  std::vector<SubjectOutcome> subjects;
  std::optional<StatsReport> stats;
};

/// Runs the configured mode end to end. Validation problems throw before
/// any output exists; per-subject failures are collected and yield exit 3.
RunResult run_pipeline(const PipelineConfig& config);

/// Magnitude signal as the pipeline sees it: fused and optionally filtered.
MagnitudeSignal<double> preprocess(const RawRecording<double>& recording, const FilterConfig& filter);

/// Markdown summary of an artifact directory, with reference comparisons.
std::string render_report(const std::filesystem::path& artifact_dir);

}  // namespace tugfall
