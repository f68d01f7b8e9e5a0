#include "metafuse/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

#include <nlohmann/json.hpp>

#include "metafuse/csv.hpp"
#include "metafuse/error.hpp"
#include "metafuse/random.hpp"
#include "metafuse/report_io.hpp"

namespace metafuse {
namespace {

constexpr std::array<const char*, 8> kSites = {"lower extremity", "upper extremity", "back", "trunk",
                                               "face", "abdomen", "scalp", "chest"};

std::string sample_id(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "SYN_%06zu", i);
  return buf;
}

FeatureMatrix make_features(const SyntheticSpec& spec, const std::vector<int>& labels, const std::string& name,
                            std::size_t dim) {
  Rng rng(derive_seed(spec.seed, "image/" + name));
  const std::size_t groups = (spec.classes + 1) / 2;
  Matrix<double> group_mean(groups, dim);
  Matrix<double> class_mean(spec.classes, dim);
  for (double& v : group_mean.values()) v = spec.group_signal * standard_normal(rng);
  for (double& v : class_mean.values()) v = spec.class_signal * standard_normal(rng);

  FeatureMatrix f;
  f.extractor_name = name;
  f.data = Matrix<float>(labels.size(), dim);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto c = static_cast<std::size_t>(labels[i]);
    const auto g = c / 2;
    auto row = f.data.row(i);
    for (std::size_t j = 0; j < dim; ++j) {
      const double v = 0.5 + group_mean(g, j) + class_mean(c, j) + 0.5 * standard_normal(rng);
      // Pooled CNN activations are non-negative.
      row[j] = static_cast<float>(std::max(0.0, v));
    }
    f.sample_ids.push_back(sample_id(i));
  }
  return f;
}

FeatureMatrix perturbed(const FeatureMatrix& f, std::uint64_t seed) {
  Rng rng(derive_seed(seed, "augmented/" + f.extractor_name));
  FeatureMatrix out = f;
  for (float& v : out.data.values()) v = static_cast<float>(std::max(0.0, v + 0.1 * standard_normal(rng)));
  return out;
}

}  // namespace

SyntheticDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.samples < 2 * spec.classes || spec.classes < 2) throw DomainError("synthetic: too few samples or classes");
  if (spec.extractors.empty()) throw DomainError("synthetic: no extractors");

  SyntheticDataset data;
  Rng label_rng(derive_seed(spec.seed, "labels"));
  std::vector<int> labels(spec.samples);
  for (auto& y : labels) y = static_cast<int>(uniform_below(label_rng, spec.classes));

  for (std::size_t k = 0; k < spec.classes; ++k) data.labels.labels.class_names.push_back("c" + std::to_string(k));
  data.labels.labels.labels = labels;
  for (std::size_t i = 0; i < spec.samples; ++i) data.labels.sample_ids.push_back(sample_id(i));

  for (const auto& [name, dim] : spec.extractors) {
    data.features.push_back(make_features(spec, labels, name, dim));
    if (spec.with_augmented) data.augmented_features.push_back(perturbed(data.features.back(), spec.seed));
  }

  Rng meta_rng(derive_seed(spec.seed, spec.informative_metadata ? "metadata" : "metadata/noise"));
  auto& table = data.metadata.table;
  table.field_names = {"age", "sex", "site"};
  data.metadata.sample_ids = data.labels.sample_ids;
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const int c = labels[i];
    const bool odd = (c % 2) == 1;
    int age;
    std::string sex;
    std::string site;
    if (spec.informative_metadata) {
      // Even class of a pair skews young and female, odd skews old and male.
      age = odd ? static_cast<int>(uniform_int(meta_rng, 9, 17)) * 5 : static_cast<int>(uniform_int(meta_rng, 1, 10)) * 5;
      const bool typical = uniform_unit(meta_rng) < 0.85;
      sex = (odd == typical) ? "male" : "female";
      site = uniform_unit(meta_rng) < 0.6 ? kSites[static_cast<std::size_t>(c) % kSites.size()]
                                          : kSites[uniform_below(meta_rng, kSites.size())];
    } else {
      age = static_cast<int>(uniform_int(meta_rng, 1, 17)) * 5;
      sex = coin_flip(meta_rng) ? "male" : "female";
      site = kSites[uniform_below(meta_rng, kSites.size())];
    }
    std::vector<std::optional<std::string>> rec = {std::to_string(age), sex, site};
    for (auto& v : rec) {
      if (uniform_unit(meta_rng) < spec.missing_rate) v.reset();
    }
    table.records.push_back(std::move(rec));
  }
  return data;
}

std::filesystem::path write_synthetic(const SyntheticDataset& data, const std::filesystem::path& dir,
                                      std::uint64_t split_seed) {
  std::filesystem::create_directories(dir);
  nlohmann::json extractors = nlohmann::json::object();
  for (std::size_t e = 0; e < data.features.size(); ++e) {
    const auto& f = data.features[e];
    write_features(f, dir / (f.extractor_name + ".mff"));
    nlohmann::json entry = {{"unprocessed", f.extractor_name + ".mff"}};
    if (e < data.augmented_features.size()) {
      write_features(data.augmented_features[e], dir / (f.extractor_name + "_aug.mff"));
      entry["augmented"] = f.extractor_name + "_aug.mff";
    }
    extractors[f.extractor_name] = std::move(entry);
  }

  std::ostringstream labels;
  labels << "sample_id,label\n";
  for (std::size_t i = 0; i < data.labels.sample_ids.size(); ++i) {
    labels << data.labels.sample_ids[i] << ','
           << data.labels.labels.class_names[static_cast<std::size_t>(data.labels.labels.labels[i])] << '\n';
  }
  write_text(dir / "labels.csv", labels.str());

  std::ostringstream meta;
  meta << "sample_id";
  for (const auto& f : data.metadata.table.field_names) meta << ',' << csv::escape(f);
  meta << '\n';
  for (std::size_t i = 0; i < data.metadata.sample_ids.size(); ++i) {
    meta << data.metadata.sample_ids[i];
    for (const auto& v : data.metadata.table.records[i]) meta << ',' << (v ? csv::escape(*v) : std::string{});
    meta << '\n';
  }
  write_text(dir / "metadata.csv", meta.str());

  nlohmann::json cfg;
  cfg["extractors"] = std::move(extractors);
  cfg["data"] = {{"labels_csv", "labels.csv"},
                 {"metadata_csv", "metadata.csv"},
                 {"id_column", "sample_id"},
                 {"label_column", "label"},
                 {"metadata_fields", data.metadata.table.field_names},
                 {"class_names", data.labels.labels.class_names}};
  cfg["split"] = {{"seed", split_seed}, {"train_fraction", 0.7}, {"stratified", false}};
  cfg["train"] = {{"max_epochs", 2000}, {"gradient_tolerance", 1e-6}, {"learning_rate", 0.1}, {"backtracking", true}};
  cfg["variants"] = {{"image_only", true},
                     {"fused", true},
                     {"unprocessed", true},
                     {"augmented", !data.augmented_features.empty()}};
  cfg["output_dir"] = "out";
  const auto path = dir / "config.json";
  write_text(path, cfg.dump(2) + "\n");
  return path;
}

}  // namespace metafuse
