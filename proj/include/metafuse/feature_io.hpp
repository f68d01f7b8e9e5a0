#pragma once

// Feature files, labels, sample-id alignment and the fixed train/test split.
//
// Feature file layout (all integers little-endian):
//
//   offset  size  field
//   0       8     magic "MFEATURE"
//   8       4     u32 format version (1)
//   12      8     u64 N (rows)
//   20      8     u64 d (columns)
//   28      4+L   u32 L, extractor name (UTF-8)
//   ...     N x   u32 len, sample id (UTF-8)
//   ...     4Nd   f32 payload, row-major
//   ...     4     u32 CRC-32 (zlib polynomial) of the payload bytes
//
// See docs/feature_format.md for the full description.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metafuse/matrix.hpp"

namespace metafuse {

inline constexpr std::string_view kFeatureMagic = "MFEATURE";
inline constexpr std::uint32_t kFeatureFormatVersion = 1;

struct FeatureMatrix {
  Matrix<float> data;
  std::vector<std::string> sample_ids;
  std::string extractor_name;

  std::size_t rows() const noexcept { return data.rows(); }
  std::size_t cols() const noexcept { return data.cols(); }

  /// Throws on NaN/Inf, empty shape, id count mismatch or duplicate ids.
  void validate() const;

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

void write_features(const FeatureMatrix& m, const std::filesystem::path& path);
FeatureMatrix read_features(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize_features(const FeatureMatrix& m);
FeatureMatrix deserialize_features(std::span<const std::uint8_t> bytes, const std::string& context = "features");

/// CSV fixture format: header `<id_column>,<f0>,<f1>,...`, one row per sample.
FeatureMatrix read_features_csv(const std::filesystem::path& path, const std::string& extractor_name,
                                const std::string& id_column = "sample_id");

/// Dispatches on extension: `.csv` goes through read_features_csv, anything else is binary.
FeatureMatrix load_features(const std::filesystem::path& path, const std::string& extractor_name = {});

struct LabelVector {
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t num_classes() const noexcept { return class_names.size(); }
  void validate() const;
};

struct LabelSource {
  std::vector<std::string> sample_ids;
  LabelVector labels;
};

/// Reads `id_column` and `label_column`. Class order follows `class_names`
/// when given (unknown labels are an error), otherwise sorted label text.
LabelSource load_labels_csv(const std::filesystem::path& path, const std::string& id_column,
                            const std::string& label_column,
                            const std::optional<std::vector<std::string>>& class_names = std::nullopt);

/// For each canonical id, the row holding it in `source_ids`. Any id present
/// on one side only raises AlignmentError naming the first offender.
std::vector<std::size_t> align_rows(const std::vector<std::string>& canonical_ids,
                                    const std::vector<std::string>& source_ids, std::string_view source_name);

/// Rows of m in the given order.
FeatureMatrix select_rows(const FeatureMatrix& m, const std::vector<std::size_t>& order);

struct SplitSpec {
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  bool stratified = false;
  std::vector<std::size_t> train_indices;  // ascending
  std::vector<std::size_t> test_indices;   // ascending

  std::size_t size() const noexcept { return train_indices.size() + test_indices.size(); }
  /// Hex digest of (N, train, test); equal fingerprints mean equal splits.
  std::string fingerprint() const;
};

/// round(fraction * n) with ties away from zero.
std::size_t train_count(std::size_t n, double fraction);

/// Seeded unstratified split. Throws DomainError if either side would be empty.
SplitSpec fixed_split(std::size_t n, std::uint64_t seed, double fraction = 0.7);

/// Per-class split; class quotas use largest remainders so |train| still equals round(fraction * N).
SplitSpec stratified_split(const LabelVector& y, std::uint64_t seed, double fraction = 0.7);

}  // namespace metafuse
