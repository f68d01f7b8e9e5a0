#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "metafuse/error.hpp"
#include "metafuse/experiment.hpp"
#include "metafuse/feature_io.hpp"
#include "metafuse/metadata_codec.hpp"
#include "metafuse/report_io.hpp"
#include "metafuse/softmax_classifier.hpp"
#include "metafuse/synthetic.hpp"

namespace fs = std::filesystem;
using namespace metafuse;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitAlignment = 3;
constexpr int kExitNumeric = 4;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
      return kExitConfig;
    case ErrorKind::alignment:
      return kExitAlignment;
    case ErrorKind::numeric:
      return kExitNumeric;
    default:
      return kExitFailure;
  }
}

struct Overrides {
  std::optional<std::uint64_t> split_seed;
  std::optional<std::uint64_t> train_seed;
  std::optional<int> workers;
  std::optional<std::string> kernels;
};

void add_overrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--split-seed", o.split_seed, "Override split.seed");
  cmd->add_option("--train-seed", o.train_seed, "Override train.seed");
  cmd->add_option("--kernels", o.kernels, "Kernel selection: auto, scalar or simd");
}

ExperimentConfig configure(const fs::path& path, const Overrides& o) {
  ExperimentConfig cfg = load_config(path);
  if (o.split_seed) cfg.split_seed = *o.split_seed;
  if (o.train_seed) cfg.train.seed = *o.train_seed;
  if (o.workers) cfg.workers = *o.workers;
  if (o.kernels) cfg.train.kernels = kernels::parse_preference(*o.kernels);
  cfg.validate();
  return cfg;
}

const ExtractorSource& find_extractor(const ExperimentConfig& cfg, const std::string& name) {
  if (name.empty()) {
    if (cfg.extractors.size() == 1) return cfg.extractors.front();
    throw ConfigError("--extractor is required when the config lists several extractors");
  }
  for (const auto& e : cfg.extractors) {
    if (e.name == name) return e;
  }
  throw ConfigError("extractor '" + name + "' is not in the config");
}

struct Cell {
  std::string extractor;
  std::string modality = "fused";
  std::string condition = "unprocessed";
};

void add_cell(CLI::App* cmd, Cell& c) {
  cmd->add_option("--extractor", c.extractor, "Extractor name from the config");
  cmd->add_option("--modality", c.modality, "image_only or fused")->capture_default_str();
  cmd->add_option("--condition", c.condition, "unprocessed or augmented")->capture_default_str();
}

FusedMatrix design_for(const ExperimentConfig& cfg, const Dataset& ds, const Cell& cell) {
  const auto& src = find_extractor(cfg, cell.extractor);
  const auto features = load_aligned_features(cfg, ds, src, parse_condition(cell.condition));
  return build_design(ds, features, parse_modality(cell.modality));
}

std::string run_label(const FusedMatrix& design, const Cell& cell) {
  return design.extractor_name + "." + cell.condition + "." + cell.modality;
}

// --- verbs -----------------------------------------------------------------

struct EncodeArgs {
  fs::path metadata;
  fs::path output;
  std::string id_column = "sample_id";
  std::vector<std::string> fields;
};

void cmd_encode(const EncodeArgs& a) {
  const auto src = load_metadata_csv(a.metadata, a.id_column, a.fields);
  const auto enc = encode_table(src.table);
  FeatureMatrix out;
  out.extractor_name = "metadata";
  out.sample_ids = src.sample_ids;
  out.data = Matrix<float>(enc.values.rows(), enc.values.cols());
  for (std::size_t i = 0; i < enc.values.values().size(); ++i) out.data.values()[i] = enc.values.values()[i];
  if (a.output.extension() == ".csv") {
    std::ostringstream csv;
    csv << a.id_column;
    for (const auto& s : enc.spans) {
      for (std::size_t j = 0; j < s.width; ++j) csv << ',' << s.name << '_' << j;
    }
    csv << '\n';
    for (std::size_t r = 0; r < out.rows(); ++r) {
      csv << out.sample_ids[r];
      for (std::size_t j = 0; j < out.cols(); ++j) csv << ',' << static_cast<int>(enc.values(r, j));
      csv << '\n';
    }
    write_text(a.output, csv.str());
  } else {
    write_features(out, a.output);
  }
  std::cout << "encoded " << out.rows() << " rows, d_K'=" << out.cols() << '\n';
  for (const auto& s : enc.spans) std::cout << "  " << s.name << " offset=" << s.offset << " width=" << s.width << '\n';
}

struct AugmentArgs {
  fs::path input;
  fs::path output;
  std::uint64_t seed = 0;
  std::vector<std::size_t> resize;
  int workers = 1;
};

void cmd_augment(const AugmentArgs& a) {
  std::optional<std::pair<std::size_t, std::size_t>> resize;
  if (!a.resize.empty()) {
    if (a.resize.size() != 2 || a.resize[0] == 0 || a.resize[1] == 0) {
      throw ConfigError("--resize expects two positive values: height width");
    }
    resize = std::make_pair(a.resize[0], a.resize[1]);
  }
  const auto n = stage_augmented_images(a.input, a.output, a.seed, resize, a.workers);
  std::cout << "augmented " << n << " images into " << a.output.string() << '\n';
}

struct TrainArgs {
  fs::path config;
  fs::path model;
  Cell cell;
  Overrides overrides;
};

void cmd_train(const TrainArgs& a) {
  const auto cfg = configure(a.config, a.overrides);
  const auto ds = prepare_dataset(cfg);
  const auto design = design_for(cfg, ds, a.cell);
  const auto x = take_rows(design.data, ds.split.train_indices);
  const auto y = take_labels(ds.labels, ds.split.train_indices);
  auto result = train(x, y, ds.labels.class_names, cfg.train);
  result.model.layout = {design.extractor_name, design.image_span.width, design.metadata_fields};
  save_model(result.model, a.model);
  const auto& t = result.trace;
  std::cout << run_label(design, a.cell) << ": epochs=" << t.epochs << " converged=" << (t.converged ? "yes" : "no")
            << " loss=" << format_number(t.loss.back()) << " grad_inf=" << format_number(t.gradient_inf_norm)
            << " kernel=" << t.kernel << " seconds=" << format_number(t.wall_seconds) << '\n';
}

struct EvaluateArgs {
  fs::path config;
  fs::path model;
  fs::path output;
  Cell cell;
  Overrides overrides;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const auto cfg = configure(a.config, a.overrides);
  const auto model = load_model(a.model);
  const auto ds = prepare_dataset(cfg);
  const auto design = design_for(cfg, ds, a.cell);
  if (model.num_features() != design.cols() || model.layout.image_width != design.image_span.width ||
      model.layout.metadata_fields != design.metadata_fields) {
    throw AlignmentError("model layout (" + std::to_string(model.num_features()) +
                         " features) does not match the design matrix (" + std::to_string(design.cols()) + ")");
  }
  if (model.class_names != ds.labels.class_names) throw AlignmentError("model classes do not match the label set");
  const auto x = take_rows(design.data, ds.split.test_indices);
  const auto y = take_labels(ds.labels, ds.split.test_indices);
  const auto rep = evaluate(y, predict_proba(model, x), ds.labels.class_names, ds.split.fingerprint(),
                            run_label(design, a.cell));
  const std::vector<std::string> prov = {"config_fingerprint=" + config_fingerprint(cfg),
                                         "model=" + a.model.filename().string()};
  write_text(a.output / (rep.name + ".metrics.tsv"), metrics_table(rep, prov));
  write_text(a.output / (rep.name + ".roc.tsv"), roc_table(rep, prov));
  write_text(a.output / (rep.name + ".report.json"), report_to_json(rep));
  std::cout << rep.name << ": accuracy=" << format_number(rep.macro.v[0])
            << " f_measure=" << format_number(rep.macro.v[static_cast<std::size_t>(Metric::f_measure)])
            << " macro_auroc=" << format_number(rep.macro_auroc) << '\n';
}

struct RunArgs {
  fs::path config;
  std::optional<fs::path> output;
  Overrides overrides;
};

void cmd_run(const RunArgs& a) {
  auto cfg = configure(a.config, a.overrides);
  if (a.output) cfg.output_dir = *a.output;
  const auto result = run_experiment(cfg);
  const auto files = emit_reports(result, cfg, cfg.output_dir);
  for (const auto& r : result.records) {
    std::cout << r.label() << ": d_K=" << r.image_width << " d_K'=" << r.metadata_width << " epochs=" << r.epochs
              << " f_measure=" << format_number(r.report.macro.v[static_cast<std::size_t>(Metric::f_measure)])
              << " macro_auroc=" << format_number(r.report.macro_auroc) << '\n';
  }
  std::cout << "wrote " << files.size() << " files to " << cfg.output_dir.string() << '\n';
}

struct ReportArgs {
  fs::path input;
  std::optional<fs::path> output;
};

// Rebuilds the delta tables from the per-run reports of an earlier `run`.
void cmd_report(const ReportArgs& a) {
  const fs::path runs = a.input / "runs";
  if (!fs::is_directory(runs)) throw ConfigError("'" + runs.string() + "' is not a directory");
  std::map<std::string, EvaluationReport> reports;
  for (const auto& entry : fs::directory_iterator(runs)) {
    const auto name = entry.path().filename().string();
    const std::string suffix = ".report.json";
    if (name.size() <= suffix.size() || name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
    auto rep = report_from_json(read_text(entry.path()));
    reports.emplace(rep.name, std::move(rep));
  }
  if (reports.empty()) throw ConfigError("no *.report.json files under '" + runs.string() + "'");

  std::vector<DeltaEntry> deltas;
  for (const auto& [label, fused] : reports) {
    const std::string tail = ".fused";
    if (label.size() <= tail.size() || label.compare(label.size() - tail.size(), tail.size(), tail) != 0) continue;
    const std::string stem = label.substr(0, label.size() - tail.size());
    const auto io = reports.find(stem + ".image_only");
    if (io == reports.end()) continue;
    const auto dot = stem.rfind('.');
    if (dot == std::string::npos) throw FormatError("run label '" + label + "' is not <network>.<condition>.<modality>");
    deltas.push_back({stem.substr(0, dot), parse_condition(stem.substr(dot + 1)), delta_report(fused, io->second)});
  }
  if (deltas.empty()) throw ConfigError("no fused/image_only report pairs found");

  const fs::path out = a.output.value_or(a.input);
  const std::vector<std::string> prov = {"split=" + deltas.front().delta.split_fingerprint,
                                         "source=" + fs::path(a.input).filename().string()};
  write_text(out / "bars.tsv", bar_table(deltas, prov));
  write_text(out / "boxplot.tsv", boxplot_table(deltas, prov));
  write_text(out / "boxplot_summary.tsv", boxplot_summary_table(deltas, prov));
  for (const auto& d : deltas) {
    const auto f = static_cast<std::size_t>(Metric::f_measure);
    std::cout << d.extractor << '.' << to_string(d.condition) << ": delta f_measure=" << format_number(d.delta.macro_delta.v[f])
              << " delta macro_auroc=" << format_number(d.delta.macro_auroc_delta) << '\n';
  }
}

struct SynthArgs {
  fs::path output;
  SyntheticSpec spec;
  bool noise = false;
  std::uint64_t split_seed = 0;
};

void cmd_synth(SynthArgs a) {
  a.spec.informative_metadata = !a.noise;
  const auto cfg = write_synthetic(make_synthetic(a.spec), a.output, a.split_seed);
  std::cout << "wrote synthetic dataset; config at " << cfg.string() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"metafuse: fuse image features with encoded metadata and compare softmax classifiers"};
  app.require_subcommand(1);

  EncodeArgs encode;
  auto* c_encode = app.add_subcommand("encode", "Encode metadata fields as ASCII codes into a feature file");
  c_encode->add_option("--metadata", encode.metadata, "Metadata CSV")->required();
  c_encode->add_option("--fields", encode.fields, "Fields to encode, in order")->required()->delimiter(',');
  c_encode->add_option("--id-column", encode.id_column)->capture_default_str();
  c_encode->add_option("-o,--output", encode.output, "Output .mff (or .csv) path")->required();

  AugmentArgs augment;
  auto* c_augment = app.add_subcommand("augment", "Stage randomly flipped, rotated and shifted copies of images");
  c_augment->add_option("--input", augment.input, "Image directory")->required();
  c_augment->add_option("-o,--output", augment.output, "Output directory")->required();
  c_augment->add_option("--seed", augment.seed)->capture_default_str();
  c_augment->add_option("--resize", augment.resize, "Bilinear resize to HEIGHT WIDTH after augmenting")->expected(2);
  c_augment->add_option("--workers", augment.workers)->capture_default_str();

  TrainArgs trainargs;
  auto* c_train = app.add_subcommand("train", "Train one classifier on the training split");
  c_train->add_option("-c,--config", trainargs.config)->required();
  c_train->add_option("-m,--model", trainargs.model, "Output model path")->required();
  add_cell(c_train, trainargs.cell);
  add_overrides(c_train, trainargs.overrides);

  EvaluateArgs evalargs;
  auto* c_eval = app.add_subcommand("evaluate", "Evaluate a trained model on the test split");
  c_eval->add_option("-c,--config", evalargs.config)->required();
  c_eval->add_option("-m,--model", evalargs.model)->required();
  c_eval->add_option("-o,--output", evalargs.output, "Report directory")->required();
  add_cell(c_eval, evalargs.cell);
  add_overrides(c_eval, evalargs.overrides);

  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Run the full extractor x variant grid and write every report");
  c_run->add_option("-c,--config", run.config)->required();
  c_run->add_option("-o,--output", run.output, "Override output_dir");
  c_run->add_option("--workers", run.overrides.workers, "Concurrent runs");
  add_overrides(c_run, run.overrides);

  ReportArgs report;
  auto* c_report = app.add_subcommand("report", "Rebuild delta tables from the per-run reports of a run directory");
  c_report->add_option("--input", report.input, "Output directory of an earlier run")->required();
  c_report->add_option("-o,--output", report.output, "Where to write the tables (default: --input)");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "Write a synthetic dataset and a matching config");
  c_synth->add_option("-o,--output", synth.output)->required();
  c_synth->add_option("--seed", synth.spec.seed)->capture_default_str();
  c_synth->add_option("--split-seed", synth.split_seed)->capture_default_str();
  c_synth->add_option("--samples", synth.spec.samples)->capture_default_str();
  c_synth->add_option("--classes", synth.spec.classes)->capture_default_str();
  c_synth->add_flag("--noise-metadata", synth.noise, "Draw metadata independently of the class");
  c_synth->add_flag("--augmented", synth.spec.with_augmented, "Also write perturbed feature files");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*c_encode) cmd_encode(encode);
    if (*c_augment) cmd_augment(augment);
    if (*c_train) cmd_train(trainargs);
    if (*c_eval) cmd_evaluate(evalargs);
    if (*c_run) cmd_run(run);
    if (*c_report) cmd_report(report);
    if (*c_synth) cmd_synth(synth);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return 0;
}
