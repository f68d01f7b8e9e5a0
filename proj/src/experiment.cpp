#include "metafuse/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "metafuse/augmentation.hpp"
#include "metafuse/error.hpp"
#include "metafuse/random.hpp"
#include "metafuse/report_io.hpp"

namespace metafuse {

using nlohmann::json;

std::string_view to_string(Modality m) { return m == Modality::fused ? "fused" : "image_only"; }
std::string_view to_string(Condition c) { return c == Condition::augmented ? "augmented" : "unprocessed"; }

Modality parse_modality(std::string_view s) {
  if (s == "fused") return Modality::fused;
  if (s == "image_only") return Modality::image_only;
  throw ConfigError("unknown modality '" + std::string(s) + "' (expected image_only|fused)");
}

Condition parse_condition(std::string_view s) {
  if (s == "unprocessed") return Condition::unprocessed;
  if (s == "augmented") return Condition::augmented;
  throw ConfigError("unknown condition '" + std::string(s) + "' (expected unprocessed|augmented)");
}

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::validate() const {
  if (extractors.empty()) throw ConfigError("config lists no feature files");
  std::set<std::string> names;
  for (const auto& e : extractors) {
    if (e.name.empty()) throw ConfigError("extractor name must be non-empty");
    if (!names.insert(e.name).second) throw ConfigError("duplicate extractor '" + e.name + "'");
    if (augmented && !e.augmented) {
      throw ConfigError("augmented variant requested but extractor '" + e.name + "' has no augmented feature file");
    }
  }
  if (labels_csv.empty()) throw ConfigError("labels_csv is required");
  if (!image_only && !fused) throw ConfigError("no modality requested (image_only and fused both disabled)");
  if (!unprocessed && !augmented) throw ConfigError("no condition requested (unprocessed and augmented both disabled)");
  if (fused && metadata_fields.empty()) throw ConfigError("fused variant requested but metadata_fields is empty");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ConfigError("train_fraction must lie in (0, 1)");
  if (workers < 1) throw ConfigError("workers must be >= 1");
  train.validate();
}

std::vector<Modality> ExperimentConfig::modalities() const {
  std::vector<Modality> out;
  if (image_only) out.push_back(Modality::image_only);
  if (fused) out.push_back(Modality::fused);
  return out;
}

std::vector<Condition> ExperimentConfig::conditions() const {
  std::vector<Condition> out;
  if (unprocessed) out.push_back(Condition::unprocessed);
  if (augmented) out.push_back(Condition::augmented);
  return out;
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

const std::set<std::string> kTopKeys = {"extractors", "data", "split", "train", "variants", "workers", "output_dir"};

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(json_text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!kTopKeys.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  }

  ExperimentConfig cfg;
  try {
    if (j.contains("extractors")) {
      for (const auto& [name, v] : j.at("extractors").items()) {
        ExtractorSource src;
        src.name = name;
        if (v.is_string()) {
          src.unprocessed = resolve(base_dir, v.get<std::string>());
        } else {
          src.unprocessed = resolve(base_dir, v.at("unprocessed").get<std::string>());
          if (v.contains("augmented")) src.augmented = resolve(base_dir, v.at("augmented").get<std::string>());
          if (v.contains("unprocessed_manifest")) {
            src.unprocessed_manifest = resolve(base_dir, v.at("unprocessed_manifest").get<std::string>());
          }
          if (v.contains("augmented_manifest")) {
            src.augmented_manifest = resolve(base_dir, v.at("augmented_manifest").get<std::string>());
          }
        }
        cfg.extractors.push_back(std::move(src));
      }
      std::sort(cfg.extractors.begin(), cfg.extractors.end(),
                [](const auto& a, const auto& b) { return a.name < b.name; });
    }
    const json data = j.value("data", json::object());
    if (data.contains("labels_csv")) cfg.labels_csv = resolve(base_dir, data.at("labels_csv").get<std::string>());
    cfg.metadata_csv = data.contains("metadata_csv") ? resolve(base_dir, data.at("metadata_csv").get<std::string>())
                                                     : cfg.labels_csv;
    cfg.id_column = get_or<std::string>(data, "id_column", cfg.id_column);
    cfg.label_column = get_or<std::string>(data, "label_column", cfg.label_column);
    cfg.metadata_fields = get_or<std::vector<std::string>>(data, "metadata_fields", {});
    if (data.contains("class_names")) cfg.class_names = data.at("class_names").get<std::vector<std::string>>();

    const json split = j.value("split", json::object());
    cfg.split_seed = get_or<std::uint64_t>(split, "seed", cfg.split_seed);
    cfg.train_fraction = get_or<double>(split, "train_fraction", cfg.train_fraction);
    cfg.stratified = get_or<bool>(split, "stratified", cfg.stratified);

    const json train = j.value("train", json::object());
    cfg.train.max_epochs = get_or<int>(train, "max_epochs", cfg.train.max_epochs);
    cfg.train.gradient_tolerance = get_or<double>(train, "gradient_tolerance", cfg.train.gradient_tolerance);
    cfg.train.learning_rate = get_or<double>(train, "learning_rate", cfg.train.learning_rate);
    cfg.train.backtracking = get_or<bool>(train, "backtracking", cfg.train.backtracking);
    cfg.train.seed = get_or<std::uint64_t>(train, "seed", cfg.train.seed);
    cfg.train.kernels = kernels::parse_preference(get_or<std::string>(train, "kernels", "auto"));

    const json variants = j.value("variants", json::object());
    cfg.image_only = get_or<bool>(variants, "image_only", cfg.image_only);
    cfg.fused = get_or<bool>(variants, "fused", cfg.fused);
    cfg.unprocessed = get_or<bool>(variants, "unprocessed", cfg.unprocessed);
    cfg.augmented = get_or<bool>(variants, "augmented", cfg.augmented);

    cfg.workers = get_or<int>(j, "workers", cfg.workers);
    if (j.contains("output_dir")) cfg.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.parent_path());
}

namespace {

json config_json(const ExperimentConfig& cfg, bool include_runtime) {
  json j;
  json ex = json::object();
  for (const auto& e : cfg.extractors) {
    json v;
    v["unprocessed"] = e.unprocessed.generic_string();
    if (e.augmented) v["augmented"] = e.augmented->generic_string();
    if (e.unprocessed_manifest) v["unprocessed_manifest"] = e.unprocessed_manifest->generic_string();
    if (e.augmented_manifest) v["augmented_manifest"] = e.augmented_manifest->generic_string();
    ex[e.name] = std::move(v);
  }
  j["extractors"] = std::move(ex);
  j["data"] = {{"labels_csv", cfg.labels_csv.generic_string()},
               {"metadata_csv", cfg.metadata_csv.generic_string()},
               {"id_column", cfg.id_column},
               {"label_column", cfg.label_column},
               {"metadata_fields", cfg.metadata_fields}};
  if (cfg.class_names) j["data"]["class_names"] = *cfg.class_names;
  j["split"] = {{"seed", cfg.split_seed}, {"train_fraction", cfg.train_fraction}, {"stratified", cfg.stratified}};
  const char* kpref = cfg.train.kernels == kernels::Preference::scalar ? "scalar"
                      : cfg.train.kernels == kernels::Preference::simd ? "simd"
                                                                       : "auto";
  j["train"] = {{"max_epochs", cfg.train.max_epochs},
                {"gradient_tolerance", cfg.train.gradient_tolerance},
                {"learning_rate", cfg.train.learning_rate},
                {"backtracking", cfg.train.backtracking},
                {"seed", cfg.train.seed},
                {"kernels", kpref}};
  j["variants"] = {{"image_only", cfg.image_only},
                   {"fused", cfg.fused},
                   {"unprocessed", cfg.unprocessed},
                   {"augmented", cfg.augmented}};
  if (include_runtime) {
    j["workers"] = cfg.workers;
    j["output_dir"] = cfg.output_dir.generic_string();
  }
  return j;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string config_to_json(const ExperimentConfig& cfg, bool include_runtime) {
  return config_json(cfg, include_runtime).dump(2) + "\n";
}

std::string config_fingerprint(const ExperimentConfig& cfg) { return hex64(fnv1a(config_json(cfg, false).dump())); }

// ---------------------------------------------------------------------------
// Data preparation

Dataset prepare_dataset(const ExperimentConfig& cfg) {
  Dataset ds;
  LabelSource labels = load_labels_csv(cfg.labels_csv, cfg.id_column, cfg.label_column, cfg.class_names);
  ds.sample_ids = std::move(labels.sample_ids);
  ds.labels = std::move(labels.labels);
  ds.split = cfg.stratified ? stratified_split(ds.labels, cfg.split_seed, cfg.train_fraction)
                            : fixed_split(ds.sample_ids.size(), cfg.split_seed, cfg.train_fraction);

  if (cfg.fused) {
    MetadataSource meta = load_metadata_csv(cfg.metadata_csv, cfg.id_column, cfg.metadata_fields);
    const auto order = align_rows(ds.sample_ids, meta.sample_ids, "metadata '" + cfg.metadata_csv.string() + "'");
    MetadataTable table;
    table.field_names = meta.table.field_names;
    table.records.reserve(order.size());
    for (std::size_t i : order) table.records.push_back(std::move(meta.table.records[i]));
    // Widths come from the full table, before any split.
    ds.metadata = encode_table(table);
  }
  return ds;
}

FeatureMatrix load_aligned_features(const ExperimentConfig& cfg, const Dataset& ds, const ExtractorSource& src,
                                    Condition condition) {
  (void)cfg;
  const auto& path = condition == Condition::augmented ? *src.augmented : src.unprocessed;
  FeatureMatrix raw = load_features(path, src.name);
  const auto order = align_rows(ds.sample_ids, raw.sample_ids, "features '" + path.string() + "'");
  FeatureMatrix aligned = select_rows(raw, order);
  aligned.extractor_name = src.name;
  return aligned;
}

FusedMatrix build_design(const Dataset& ds, const FeatureMatrix& features, Modality modality) {
  if (modality == Modality::image_only) return image_only(features);
  if (!ds.metadata) throw ConfigError("fused design requested but no metadata was loaded");
  return fuse(features, *ds.metadata, ds.sample_ids);
}

Matrix<double> take_rows(const Matrix<double>& x, const std::vector<std::size_t>& rows) {
  Matrix<double> out(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto src = x.row(rows[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> take_labels(const LabelVector& y, const std::vector<std::size_t>& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t i : rows) out.push_back(y.labels[i]);
  return out;
}

std::optional<double> read_extraction_seconds(const std::filesystem::path& manifest) {
  const std::string text = read_text(manifest);
  static const std::vector<std::string> keys = {"seconds", "extraction_seconds"};
  try {
    const json j = json::parse(text);
    for (const auto& k : keys) {
      if (j.contains(k)) return j.at(k).get<double>();
    }
    return std::nullopt;
  } catch (const json::exception&) {
  }
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto sep = line.find_first_of(":=");
    if (sep == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, sep));
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) continue;
    try {
      return std::stod(trim(line.substr(sep + 1)));
    } catch (const std::exception&) {
      throw FormatError("manifest '" + manifest.string() + "' has a non-numeric '" + key + "'");
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Running

std::string RunRecord::label() const {
  return extractor + "." + std::string(to_string(condition)) + "." + std::string(to_string(modality));
}

RunRecord run_single(const Dataset& ds, const FusedMatrix& design, const TrainConfig& train_cfg,
                     const std::string& extractor, Condition condition, Modality modality) {
  const auto& split = ds.split;
  const Matrix<double> x_train = take_rows(design.data, split.train_indices);
  const std::vector<int> y_train = take_labels(ds.labels, split.train_indices);

  TrainResult trained = train(x_train, y_train, ds.labels.class_names, train_cfg);
  trained.model.layout = {design.extractor_name, design.image_span.width, design.metadata_fields};

  const Matrix<double> x_test = take_rows(design.data, split.test_indices);
  const std::vector<int> y_test = take_labels(ds.labels, split.test_indices);
  const Matrix<double> proba = predict_proba(trained.model, x_test);

  RunRecord rec;
  rec.extractor = extractor;
  rec.condition = condition;
  rec.modality = modality;
  rec.image_width = design.image_span.width;
  rec.metadata_width = design.metadata_span.width;
  rec.train_seconds = trained.trace.wall_seconds;
  rec.epochs = trained.trace.epochs;
  rec.converged = trained.trace.converged;
  rec.gradient_inf_norm = trained.trace.gradient_inf_norm;
  rec.gradient_l2_norm = trained.trace.gradient_l2_norm;
  rec.step_halvings = trained.trace.step_halvings;
  rec.kernel = trained.trace.kernel;
  rec.test_indices = split.test_indices;
  rec.report = evaluate(y_test, proba, ds.labels.class_names, split.fingerprint(), rec.label());
  return rec;
}

namespace {

struct Task {
  const ExtractorSource* source;
  Condition condition;
  Modality modality;
};

[[noreturn]] void rethrow_with_context(const std::string& context) {
  try {
    throw;
  } catch (const Error& e) {
    throw Error(e.kind(), context + ": " + e.what());
  } catch (const std::exception& e) {
    throw Error(ErrorKind::io, context + ": " + e.what());
  }
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentResult result;
  result.config_fingerprint = config_fingerprint(cfg);

  const Dataset ds = prepare_dataset(cfg);
  result.split = ds.split;

  std::vector<Task> tasks;
  for (const auto& src : cfg.extractors) {
    for (Condition c : cfg.conditions()) {
      for (Modality m : cfg.modalities()) tasks.push_back({&src, c, m});
    }
  }

  // Feature files are loaded once per (extractor, condition) and shared by both modalities.
  std::map<std::pair<std::string, Condition>, std::shared_ptr<const FeatureMatrix>> features;
  std::mutex features_mutex;
  auto features_for = [&](const Task& t) {
    {
      std::lock_guard lock(features_mutex);
      auto it = features.find({t.source->name, t.condition});
      if (it != features.end()) return it->second;
    }
    auto loaded = std::make_shared<const FeatureMatrix>(load_aligned_features(cfg, ds, *t.source, t.condition));
    std::lock_guard lock(features_mutex);
    return features.emplace(std::pair{t.source->name, t.condition}, loaded).first->second;
  };

  std::vector<RunRecord> records(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const Task& t = tasks[i];
      try {
        const auto feats = features_for(t);
        const FusedMatrix design = build_design(ds, *feats, t.modality);
        records[i] = run_single(ds, design, cfg.train, t.source->name, t.condition, t.modality);
        const auto& manifest =
            t.condition == Condition::augmented ? t.source->augmented_manifest : t.source->unprocessed_manifest;
        if (manifest) records[i].extraction_seconds = read_extraction_seconds(*manifest);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), tasks.size());
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i]) continue;
    const Task& t = tasks[i];
    try {
      std::rethrow_exception(errors[i]);
    } catch (...) {
      rethrow_with_context("extractor '" + t.source->name + "', variant " + std::string(to_string(t.condition)) + "/" +
                           std::string(to_string(t.modality)));
    }
  }

  const std::string fp = ds.split.fingerprint();
  for (const auto& r : records) {
    if (r.report.split_fingerprint != fp) throw NumericError("internal: run '" + r.label() + "' used a different split");
  }

  if (cfg.image_only && cfg.fused) {
    for (std::size_t i = 0; i + 1 < records.size(); ++i) {
      const auto& a = records[i];
      const auto& b = records[i + 1];
      if (a.extractor == b.extractor && a.condition == b.condition && a.modality == Modality::image_only &&
          b.modality == Modality::fused) {
        result.deltas.push_back({a.extractor, a.condition, delta_report(b.report, a.report)});
      }
    }
  }
  result.records = std::move(records);
  return result;
}

// ---------------------------------------------------------------------------
// Reports

std::vector<std::string> emit_reports(const ExperimentResult& result, const ExperimentConfig& cfg,
                                      const std::filesystem::path& output_dir) {
  if (result.records.empty()) throw DomainError("no run records to report");
  std::error_code ec;
  std::filesystem::create_directories(output_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + output_dir.string() + "': " + ec.message());

  const std::vector<std::string> prov = {
      "config_fingerprint=" + result.config_fingerprint,
      "split_seed=" + std::to_string(cfg.split_seed) + " train_fraction=" + format_number(cfg.train_fraction) +
          " stratified=" + (cfg.stratified ? "1" : "0") + " split=" + result.split.fingerprint(),
      "train_seed=" + std::to_string(cfg.train.seed) + " max_epochs=" + std::to_string(cfg.train.max_epochs) +
          " gradient_tolerance=" + format_number(cfg.train.gradient_tolerance) +
          " learning_rate=" + format_number(cfg.train.learning_rate) +
          " backtracking=" + (cfg.train.backtracking ? "1" : "0"),
  };

  std::vector<std::string> written;
  auto emit = [&](const std::string& rel, const std::string& text) {
    write_text(output_dir / rel, text);
    written.push_back(rel);
  };

  emit("resolved_config.json", config_to_json(cfg, false));

  std::ostringstream summary;
  for (const auto& line : prov) summary << "# " << line << '\n';
  summary << "network\tcondition\tmodality\td_K\td_K_prime\tepochs\tconverged\tgradient_inf_norm";
  for (auto name : kMetricNames) summary << '\t' << name;
  summary << "\tauroc\n";
  for (const auto& r : result.records) {
    emit("runs/" + r.label() + ".metrics.tsv", metrics_table(r.report, prov));
    emit("runs/" + r.label() + ".roc.tsv", roc_table(r.report, prov));
    emit("runs/" + r.label() + ".report.json", report_to_json(r.report));
    summary << r.extractor << '\t' << to_string(r.condition) << '\t' << to_string(r.modality) << '\t'
            << r.image_width << '\t' << r.metadata_width << '\t' << r.epochs << '\t' << (r.converged ? 1 : 0) << '\t'
            << format_number(r.gradient_inf_norm);
    for (double v : r.report.macro.v) summary << '\t' << format_number(v);
    summary << '\t' << format_number(r.report.macro_auroc) << '\n';
  }
  emit("summary.tsv", summary.str());

  if (!result.deltas.empty()) {
    emit("bars.tsv", bar_table(result.deltas, prov));
    emit("boxplot.tsv", boxplot_table(result.deltas, prov));
    emit("boxplot_summary.tsv", boxplot_summary_table(result.deltas, prov));
  }

  // Wall-clock content: runtime table and manifest.
  std::ostringstream runtimes;
  for (const auto& line : prov) runtimes << "# " << line << '\n';
  runtimes << "network\td_K\textraction_unprocessed\textraction_augmented\tF_unprocessed\tF_augmented\t"
              "H_unprocessed\tH_augmented\n";
  std::vector<std::string> networks;
  for (const auto& r : result.records) {
    if (std::find(networks.begin(), networks.end(), r.extractor) == networks.end()) networks.push_back(r.extractor);
  }
  for (const auto& net : networks) {
    std::size_t dk = 0;
    std::string cells[6] = {"", "", "", "", "", ""};
    for (const auto& r : result.records) {
      if (r.extractor != net) continue;
      dk = r.image_width;
      const int ci = r.condition == Condition::augmented ? 1 : 0;
      if (r.extraction_seconds) cells[ci] = format_number(*r.extraction_seconds);
      cells[(r.modality == Modality::fused ? 4 : 2) + ci] = format_number(r.train_seconds);
    }
    runtimes << net << '\t' << dk;
    for (const auto& c : cells) runtimes << '\t' << (c.empty() ? "-" : c);
    runtimes << '\n';
  }
  emit("timing/runtimes.tsv", runtimes.str());

  json manifest;
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  manifest["created_utc"] = stamp;
  manifest["config_fingerprint"] = result.config_fingerprint;
  manifest["workers"] = cfg.workers;
  manifest["output_dir"] = output_dir.generic_string();
  json runs = json::array();
  for (const auto& r : result.records) {
    json e = {{"run", r.label()},
              {"train_seconds", r.train_seconds},
              {"epochs", r.epochs},
              {"kernel", r.kernel},
              {"threads", 1},
              {"step_halvings", r.step_halvings},
              {"gradient_l2_norm", r.gradient_l2_norm}};
    if (r.extraction_seconds) e["extraction_seconds"] = *r.extraction_seconds;
    runs.push_back(std::move(e));
  }
  manifest["runs"] = std::move(runs);
  written.push_back("timing/manifest.json");
  manifest["files"] = written;
  write_text(output_dir / "timing/manifest.json", manifest.dump(2) + "\n");
  return written;
}

// ---------------------------------------------------------------------------
// Augmentation staging

std::size_t stage_augmented_images(const std::filesystem::path& input_dir, const std::filesystem::path& output_dir,
                                   std::uint64_t seed, std::optional<std::pair<std::size_t, std::size_t>> resize,
                                   int workers) {
  static const std::set<std::string> kExtensions = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm", ".pgm"};
  if (!std::filesystem::is_directory(input_dir)) throw IoError("'" + input_dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(input_dir)) {
    if (!entry.is_regular_file()) continue;
    std::string ext = entry.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (kExtensions.contains(ext)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::filesystem::create_directories(output_dir);

  std::vector<AugmentationParams> params(files.size());
  std::vector<std::exception_ptr> errors(files.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < files.size(); i = next++) {
      try {
        params[i] = params_for_sample(seed, files[i].stem().string());
        Image img = augment(load_image(files[i]), params[i]);
        if (resize) img = resize_bilinear(img, resize->first, resize->second);
        save_image(img, output_dir / files[i].filename());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (...) {
      rethrow_with_context("image '" + files[i].string() + "'");
    }
  }

  std::ostringstream log;
  log << "# seed=" << seed << " order=flip,rotate,shift fill=0\n";
  log << "sample_id\tshift_x\tshift_y\tflip_x\tflip_y\trotation_degrees\n";
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto& p = params[i];
    char rot[32];
    std::snprintf(rot, sizeof rot, "%.17g", p.rotation_degrees);
    log << files[i].stem().string() << '\t' << p.shift_x << '\t' << p.shift_y << '\t' << (p.flip_x ? 1 : 0) << '\t'
        << (p.flip_y ? 1 : 0) << '\t' << rot << '\n';
  }
  write_text(output_dir / "augmentation.tsv", log.str());
  return files.size();
}

}  // namespace metafuse
