#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rsvp/eval.hpp"
#include "rsvp/synth.hpp"

namespace rsvp {

// Batch front end: composes preprocessing, the block-held-out split, random
// hyperparameter search per pipeline and final test evaluation, then writes
// the report artifacts (report.json, results.csv, erp_diff.csv and one
// topomap SVG per spatial pattern).

struct PreprocessConfig {
  bool car = true;
  bool car_first = true;  // CAR before the bandpass (order is configurable)
  double band_lo = 0.1;   // Hz; band_lo <= 0 disables the bandpass
  double band_hi = 30.0;
  double resample_hz = 250.0;  // 0 keeps the native rate
  double epoch_start = 0.0;    // seconds relative to stimulus onset
  double epoch_end = 1.0;
  std::vector<std::string> eog_channels = {"HEOG", "VEOG"};
  double reject_threshold_uv = 100.0;  // <= 0 disables rejection
};

struct RunConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;  // reproducibility is mandatory, so the seed is too
  std::vector<std::string> recordings;  // recording base paths; or
  std::optional<SynthConfig> synth;     // generate the dataset instead
  PreprocessConfig preprocess;
  std::vector<std::pair<FilterMethod, ModelKind>> pipelines;
  SearchSpace space;
  int budget = 100;
  int k = 10;
  int test_blocks_per_task = 3;
  int threads = 2;  // never affects results, only wall time
  int topomap_resolution = 48;
};

/// Parses the JSON run configuration (see README for the schema). Unknown
/// keys are rejected so typos cannot silently fall back to defaults.
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// Standalone parsers for the "synth" and "preprocess" sections, used by the
/// corresponding CLI subcommands.
SynthConfig parse_synth_config(const std::string& json_text);
PreprocessConfig parse_preprocess_config(const std::string& json_text);

/// Applies the configured conditioning chain (reference, bandpass,
/// decimation, epoching, trial rejection) to one recording.
EpochSet preprocess_recording(const ContinuousRecording& rec,
                              const PreprocessConfig& pre);

/// The 4 x 3 grid of every filter/classifier combination.
std::vector<std::pair<FilterMethod, ModelKind>> full_pipeline_grid();

struct DatasetOutcome {
  std::string dataset;
  Hyperparams best_hyper;
  std::vector<Candidate> candidates;
  double test_auc = 0.0;
  LinearModel model;  // refit on the full training split with best_hyper
};

struct PipelineOutcome {
  FilterMethod filter = FilterMethod::None;
  ModelKind classifier = ModelKind::Lda;
  std::vector<DatasetOutcome> per_dataset;
  double mean_test_auc = 0.0;
};

struct EvaluationReport {
  std::vector<std::string> datasets;
  std::vector<PipelineOutcome> pipelines;
  /// Across filter methods, groups = per-dataset method means; present only
  /// with at least two datasets.
  std::optional<AnovaResult> anova;
};

/// Executes the full batch and writes all artifacts into out_dir. report.json
/// is written last, so its presence marks a complete run. Throws Error with a
/// stage-tagged message on failure.
EvaluationReport run(const RunConfig& config, const std::string& out_dir);

/// Canonical report serialization; byte-identical for identical results.
std::string report_to_json(const EvaluationReport& report, const RunConfig& config);

/// Table 2-style CSV: one row per pipeline, one column per dataset plus the
/// mean. Values are serialized exactly like report.json.
std::string report_to_csv(const EvaluationReport& report);

}  // namespace rsvp
