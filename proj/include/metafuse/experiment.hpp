#pragma once

// Experiment orchestration: for every extractor and every requested
// (modality x condition) cell, build the design matrix, train on the shared
// fixed split, evaluate on its test rows and compare fused against image-only.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "metafuse/feature_io.hpp"
#include "metafuse/fusion.hpp"
#include "metafuse/metadata_codec.hpp"
#include "metafuse/metrics.hpp"
#include "metafuse/softmax_classifier.hpp"

namespace metafuse {

enum class Modality { image_only, fused };
enum class Condition { unprocessed, augmented };

std::string_view to_string(Modality m);
std::string_view to_string(Condition c);
Modality parse_modality(std::string_view s);
Condition parse_condition(std::string_view s);

struct ExtractorSource {
  std::string name;
  std::filesystem::path unprocessed;
  std::optional<std::filesystem::path> augmented;
  std::optional<std::filesystem::path> unprocessed_manifest;
  std::optional<std::filesystem::path> augmented_manifest;
};

struct ExperimentConfig {
  std::vector<ExtractorSource> extractors;  // sorted by name
  std::filesystem::path labels_csv;
  std::filesystem::path metadata_csv;       // defaults to labels_csv
  std::string id_column = "sample_id";
  std::string label_column = "label";
  std::vector<std::string> metadata_fields;
  std::optional<std::vector<std::string>> class_names;

  std::uint64_t split_seed = 0;
  double train_fraction = 0.7;
  bool stratified = false;

  TrainConfig train;

  bool image_only = true;
  bool fused = true;
  bool unprocessed = true;
  bool augmented = false;

  int workers = 1;
  std::filesystem::path output_dir = "metafuse-out";

  /// Throws ConfigError on an inconsistent configuration.
  void validate() const;
  std::vector<Modality> modalities() const;
  std::vector<Condition> conditions() const;
};

/// Parses the JSON config; relative paths resolve against the file's directory.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir = {});

/// Fully resolved config as pretty JSON (every default spelled out). Without
/// `include_runtime`, scheduling-only keys (workers, output_dir) are left out.
std::string config_to_json(const ExperimentConfig& cfg, bool include_runtime = true);

/// Digest of the result-relevant config (excludes output_dir and workers).
std::string config_fingerprint(const ExperimentConfig& cfg);

/// Labels, split and (optionally) encoded metadata in canonical row order,
/// which is the row order of the labels CSV.
struct Dataset {
  std::vector<std::string> sample_ids;
  LabelVector labels;
  SplitSpec split;
  std::optional<EncodedMetadata> metadata;
};

Dataset prepare_dataset(const ExperimentConfig& cfg);

/// Feature file for (extractor, condition), reordered to canonical rows.
FeatureMatrix load_aligned_features(const ExperimentConfig& cfg, const Dataset& ds, const ExtractorSource& src,
                                    Condition condition);

FusedMatrix build_design(const Dataset& ds, const FeatureMatrix& features, Modality modality);

/// Rows of a design matrix (widened copy).
Matrix<double> take_rows(const Matrix<double>& x, const std::vector<std::size_t>& rows);
std::vector<int> take_labels(const LabelVector& y, const std::vector<std::size_t>& rows);

/// Extraction seconds from a bridge manifest (JSON object or `key: value` / `key=value` lines).
std::optional<double> read_extraction_seconds(const std::filesystem::path& manifest);

struct RunRecord {
  std::string extractor;
  Condition condition = Condition::unprocessed;
  Modality modality = Modality::image_only;
  std::size_t image_width = 0;     // d_K
  std::size_t metadata_width = 0;  // d_K'
  std::optional<double> extraction_seconds;
  double train_seconds = 0.0;
  int epochs = 0;
  bool converged = false;
  double gradient_inf_norm = 0.0;
  double gradient_l2_norm = 0.0;
  int step_halvings = 0;
  std::string kernel;
  std::vector<std::size_t> test_indices;
  EvaluationReport report;

  std::string label() const;  // "<extractor>.<condition>.<modality>"
};

struct DeltaEntry {
  std::string extractor;
  Condition condition = Condition::unprocessed;
  DeltaReport delta;
};

struct ExperimentResult {
  std::vector<RunRecord> records;  // grid order: extractor, condition, modality
  std::vector<DeltaEntry> deltas;
  SplitSpec split;
  std::string config_fingerprint;
};

/// One training + evaluation on the shared split.
RunRecord run_single(const Dataset& ds, const FusedMatrix& design, const TrainConfig& train_cfg,
                     const std::string& extractor, Condition condition, Modality modality);

ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Writes every report file and returns the list of written paths (relative to output_dir).
/// Wall-clock dependent content goes to `timing/` only.
std::vector<std::string> emit_reports(const ExperimentResult& result, const ExperimentConfig& cfg,
                                      const std::filesystem::path& output_dir);

/// Augments every image in `input_dir` with per-image parameters derived from
/// (seed, file stem) and writes results under the same file names. Also writes
/// `augmentation.tsv` recording each image's parameters. Returns images written.
std::size_t stage_augmented_images(const std::filesystem::path& input_dir, const std::filesystem::path& output_dir,
                                   std::uint64_t seed, std::optional<std::pair<std::size_t, std::size_t>> resize,
                                   int workers);

}  // namespace metafuse
