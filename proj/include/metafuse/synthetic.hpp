#pragma once

// Synthetic stand-in for an extracted-feature dataset with clinical metadata.
//
// Classes come in pairs: the image features separate the pairs well but the
// two members of a pair only weakly, while the informative metadata (age,
// sex, site) mostly separates the members of each pair. With
// `informative_metadata = false` the metadata columns are drawn independently
// of the class. Image features and labels depend only on (seed, extractor), so
// informative and noise variants share them exactly.

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "metafuse/feature_io.hpp"
#include "metafuse/metadata_codec.hpp"

namespace metafuse {

struct SyntheticSpec {
  std::size_t samples = 2000;
  std::size_t classes = 8;
  std::vector<std::pair<std::string, std::size_t>> extractors = {{"synthetic", 256}};
  std::uint64_t seed = 0;
  bool informative_metadata = true;
  bool with_augmented = false;  // also emit a perturbed copy of each feature set
  double missing_rate = 0.03;
  double group_signal = 0.15;   // per-dimension scale of the pair-level class means
  double class_signal = 0.035;  // per-dimension scale of the class-level means
};

struct SyntheticDataset {
  std::vector<FeatureMatrix> features;            // one per extractor
  std::vector<FeatureMatrix> augmented_features;  // empty unless with_augmented
  MetadataSource metadata;                        // fields: age, sex, site
  LabelSource labels;
};

SyntheticDataset make_synthetic(const SyntheticSpec& spec);

/// Writes features (<name>.mff, <name>_aug.mff), metadata.csv, labels.csv and
/// a ready-to-run config.json into `dir`. Returns the config path.
std::filesystem::path write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir,
                                      std::uint64_t split_seed = 0);

}  // namespace metafuse
