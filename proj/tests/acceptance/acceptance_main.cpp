#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "metafuse/augmentation.hpp"
#include "metafuse/experiment.hpp"
#include "metafuse/metadata_codec.hpp"
#include "metafuse/metrics.hpp"
#include "metafuse/report_io.hpp"
#include "metafuse/softmax_classifier.hpp"
#include "metafuse/synthetic.hpp"
#include "oracles.hpp"

using namespace metafuse;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

struct Criterion {
  std::string name;
  double budget_seconds;
  std::function<Outcome()> check;
};

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("metafuse_acceptance_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Outcome softmax_properties() {
  Outcome out;
  Rng rng(1001);
  double worst_sum = 0.0, worst_shift = 0.0;
  for (int i = 0; i < 10000; ++i) {
    std::vector<double> z(1 + uniform_below(rng, 20));
    for (double& v : z) v = 50.0 * standard_normal(rng);
    const auto p = softmax(z);
    worst_sum = std::max(worst_sum, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
    const double c = 1000.0 * standard_normal(rng);
    for (double& v : z) v += c;
    const auto q = softmax(z);
    for (std::size_t j = 0; j < p.size(); ++j) worst_shift = std::max(worst_shift, std::abs(p[j] - q[j]));
  }
  if (worst_sum > 1e-12) out.fail("row sum off by " + fmt("%.3g", worst_sum));
  if (worst_shift > 1e-12) out.fail("shift changed output by " + fmt("%.3g", worst_shift));
  const auto p = softmax(std::vector<double>{1.0, 2.0, 3.0});
  const double expected[] = {0.09003057317038046, 0.24472847105479764, 0.6652409557748219};
  for (int i = 0; i < 3; ++i) {
    if (std::abs(p[static_cast<std::size_t>(i)] - expected[i]) > 1e-6) out.fail("softmax([1,2,3]) mismatch");
  }
  if (out.ok) out.detail = "max |sum-1| " + fmt("%.2g", worst_sum) + ", max shift diff " + fmt("%.2g", worst_shift);
  return out;
}

Outcome gradient_check() {
  Outcome out;
  Rng rng(1002);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 5 + uniform_below(rng, 46), d = 1 + uniform_below(rng, 10), k = 2 + uniform_below(rng, 4);
    Matrix<double> x(n, d);
    for (double& v : x.values()) v = standard_normal(rng);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i < k ? i : uniform_below(rng, k));
    std::vector<double> params(k * d + k);
    for (double& v : params) v = standard_normal(rng);
    const auto fd = oracle::central_difference(
        [&](std::span<const double> w) { return oracle::cross_entropy(x.values(), n, d, y, k, w); }, params);
    std::vector<const kernels::KernelSet*> sets = {&kernels::scalar()};
    if (kernels::simd() != nullptr) sets.push_back(kernels::simd());
    for (const auto* ks : sets) {
      const auto g = cross_entropy_objective(x, y, k, params, *ks).gradient;
      double diff = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        diff += (g[i] - fd[i]) * (g[i] - fd[i]);
        na += g[i] * g[i];
        nb += fd[i] * fd[i];
      }
      worst = std::max(worst, std::sqrt(diff) / std::max(1e-12, std::sqrt(na) + std::sqrt(nb)));
    }
  }
  if (worst >= 1e-5) out.fail("relative error " + fmt("%.3g", worst));
  else out.detail = "max relative error " + fmt("%.2g", worst);
  return out;
}

Outcome trainer_convergence() {
  Outcome out;
  Rng rng(1003);
  const std::size_t n = 1000;
  const std::vector<double> priors = {0.5, 0.3, 0.15, 0.05};
  Matrix<double> x(n, 1, 1.0);
  std::vector<int> y(n);
  std::vector<double> empirical(4, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = uniform_unit(rng);
    y[i] = u < 0.5 ? 0 : u < 0.8 ? 1 : u < 0.95 ? 2 : 3;
    empirical[static_cast<std::size_t>(y[i])] += 1.0 / static_cast<double>(n);
  }
  const auto bias_only = train(x, y, {"a", "b", "c", "d"}, TrainConfig{});
  const auto p = softmax(bias_only.model.bias);
  double worst = 0.0;
  for (std::size_t c = 0; c < 4; ++c) worst = std::max(worst, std::abs(p[c] - empirical[c]));
  if (worst > 1e-3) out.fail("bias-only priors off by " + fmt("%.3g", worst));

  Matrix<double> xb(400, 2);
  std::vector<int> yb(400);
  for (std::size_t i = 0; i < 400; ++i) {
    yb[i] = static_cast<int>(i % 2);
    const double centre = yb[i] ? 3.0 : -3.0;
    xb(i, 0) = centre + 0.5 * standard_normal(rng);
    xb(i, 1) = centre + 0.5 * standard_normal(rng);
  }
  const auto blobs = train(xb, yb, {"neg", "pos"}, TrainConfig{});
  const auto pred = predict(blobs.model, xb);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == yb[i];
  const double acc = static_cast<double>(correct) / 400.0;
  if (acc < 0.99) out.fail("separable accuracy " + fmt("%.4f", acc));
  if (blobs.trace.epochs > 2000) out.fail("separable run exceeded the epoch budget");
  if (out.ok) {
    out.detail = "prior error " + fmt("%.2g", worst) + ", separable accuracy " + fmt("%.4f", acc) + " in " +
                 std::to_string(blobs.trace.epochs) + " epochs";
  }
  return out;
}

Outcome metric_oracle() {
  Outcome out;
  double worst = 0.0;
  std::size_t checked = 0;
  auto compare = [&](const ClassMetrics& m) {
    const auto exact = oracle::exact_metrics(m.tp, m.fp, m.tn, m.fn);
    for (std::size_t i = 0; i < kMetricCount; ++i) worst = std::max(worst, std::abs(m.values.v[i] - exact[i]));
    if (m.values.mcc() < -1.0 || m.values.mcc() > 1.0) out.fail("MCC outside [-1, 1]");
    ++checked;
  };
  Rng rng(1004);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + uniform_below(rng, 7);
    ConfusionMatrix cm(k);
    for (std::size_t r = 0; r < k; ++r) {
      for (std::size_t c = 0; c < k; ++c) cm.at(r, c) = uniform_below(rng, r == c ? 500 : 60);
    }
    for (std::size_t c = 0; c < k; ++c) compare(class_metrics(cm, c));
  }
  for (std::uint64_t n = 0; n <= 6; ++n) {
    for (std::uint64_t tp = 0; tp <= n; ++tp) {
      for (std::uint64_t fp = 0; tp + fp <= n; ++fp) {
        for (std::uint64_t tn = 0; tp + fp + tn <= n; ++tn) compare(binary_metrics(tp, fp, tn, n - tp - fp - tn));
      }
    }
  }
  if (worst > 1e-12) out.fail("max deviation " + fmt("%.3g", worst));
  if (out.ok) out.detail = std::to_string(checked) + " confusion tables, max deviation " + fmt("%.2g", worst);
  return out;
}

Outcome auroc_oracle() {
  Outcome out;
  Rng rng(1005);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + uniform_below(rng, 200);
    const std::uint64_t levels = 1 + uniform_below(rng, 12);
    std::vector<double> s(n);
    std::vector<std::uint8_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(uniform_below(rng, levels)) * 0.125;
      y[i] = static_cast<std::uint8_t>(coin_flip(rng));
    }
    y[0] = 1;
    y[1] = 0;
    worst = std::max(worst, std::abs(roc_auroc(s, y).auroc - oracle::mann_whitney(s, y)));
  }
  if (worst > 1e-12) out.fail("max deviation " + fmt("%.3g", worst));
  const std::vector<double> ranked = {0.9, 0.7, 0.6, 0.3, 0.2};
  if (roc_auroc(ranked, std::vector<std::uint8_t>{1, 1, 0, 0, 0}).auroc != 1.0) out.fail("perfect ranking is not 1.0");
  if (roc_auroc(std::vector<double>(6, 0.5), std::vector<std::uint8_t>{1, 0, 1, 0, 0, 1}).auroc != 0.5) {
    out.fail("all-tied scores are not 0.5");
  }
  if (out.ok) out.detail = "max deviation from pair counting " + fmt("%.2g", worst);
  return out;
}

Outcome codec_round_trip() {
  Outcome out;
  Rng rng(1006);
  for (int trial = 0; trial < 1000 && out.ok; ++trial) {
    const auto table = oracle::random_table(rng);
    const auto enc = encode_table(table);
    if (decode_table(enc, table.field_names) != oracle::trimmed(table)) out.fail("table " + std::to_string(trial));
    for (std::size_t r = 0; r < table.rows(); ++r) {
      for (std::size_t f = 0; f < table.fields(); ++f) {
        const auto& v = table.records[r][f];
        if (v && !v->empty()) continue;
        for (std::size_t j = 0; j < enc.spans[f].width; ++j) {
          if (enc.values(r, enc.spans[f].offset + j) != 0) out.fail("missing value not encoded as zeros");
        }
      }
    }
  }
  if (out.ok) out.detail = "1000 random tables";
  return out;
}

Outcome augmentation_geometry() {
  Outcome out;
  Rng rng(1007);
  for (int trial = 0; trial < 10; ++trial) {
    const auto img = oracle::random_image(rng, 64, 64, 3);
    if (augment(img, AugmentationParams{}) != img) out.fail("identity parameters changed the image");
    Image r = img;
    for (int i = 0; i < 4; ++i) r = rotate(r, 90.0);
    if (r != img) out.fail("four quarter turns are not the identity");
    if (translate(img, 30, 0) != oracle::shifted(img, 30, 0)) out.fail("shift (30, 0) mismatch");
  }
  if (out.ok) out.detail = "10 random 64x64 images";
  return out;
}

const RunRecord& find_record(const ExperimentResult& res, Modality m) {
  for (const auto& r : res.records) {
    if (r.modality == m) return r;
  }
  throw std::runtime_error("missing run record");
}

Outcome synthetic_directional() {
  Outcome out;
  std::ostringstream detail;
  double min_f_gain = 1.0, max_noise = 0.0;
  std::size_t min_positive = 8;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SyntheticSpec spec;
    spec.seed = seed;
    const auto dir = scratch("synthetic_" + std::to_string(seed));
    auto cfg = load_config(write_synthetic(make_synthetic(spec), dir / "informative"));
    const auto informative = run_experiment(cfg);
    const auto& d = informative.deltas.at(0).delta;
    const double f_gain = d.macro_delta.f_measure();
    std::size_t positive = 0;
    for (double v : d.auroc_delta) positive += v > 0.0;
    min_f_gain = std::min(min_f_gain, f_gain);
    min_positive = std::min(min_positive, positive);
    if (f_gain < 0.05) out.fail("seed " + std::to_string(seed) + " fused F gain " + fmt("%.4f", f_gain));
    if (positive < 7) out.fail("seed " + std::to_string(seed) + " only " + std::to_string(positive) + "/8 AUROC gains");

    spec.informative_metadata = false;
    auto noise_cfg = load_config(write_synthetic(make_synthetic(spec), dir / "noise"));
    noise_cfg.image_only = false;
    const auto noise = run_experiment(noise_cfg);
    const auto nd = delta_report(find_record(noise, Modality::fused).report,
                                 find_record(informative, Modality::image_only).report);
    double worst = std::abs(nd.macro_auroc_delta);
    for (double v : nd.macro_delta.v) worst = std::max(worst, std::abs(v));
    max_noise = std::max(max_noise, worst);
    if (worst >= 0.02) out.fail("seed " + std::to_string(seed) + " noise metadata moved a macro metric by " + fmt("%.4f", worst));
    fs::remove_all(dir);
  }
  detail << "min F gain " << fmt("%.4f", min_f_gain) << ", min AUROC gains " << min_positive << "/8, max noise |delta| "
         << fmt("%.4f", max_noise);
  if (out.ok) out.detail = detail.str();
  return out;
}

int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome end_to_end_determinism(const std::string& cli) {
  Outcome out;
  const auto dir = scratch("e2e");
  const auto q = [](const fs::path& p) { return "'" + p.string() + "'"; };
  if (run_cli(cli, "synth --seed 3 --augmented -o " + q(dir / "data")) != 0) {
    out.fail("synth failed");
    return out;
  }
  for (const char* run : {"a", "b"}) {
    if (run_cli(cli, "run -c " + q(dir / "data" / "config.json") + " -o " + q(dir / run)) != 0) {
      out.fail(std::string("run ") + run + " failed");
      return out;
    }
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::recursive_directory_iterator(dir / "a")) {
    const auto rel = fs::relative(entry.path(), dir / "a");
    if (*rel.begin() == "timing" || !entry.is_regular_file()) continue;
    const auto other = dir / "b" / rel;
    if (!fs::exists(other) || read_text(entry.path()) != read_text(other)) out.fail(rel.string() + " differs");
    ++compared;
  }
  for (const auto& entry : fs::recursive_directory_iterator(dir / "b")) {
    const auto rel = fs::relative(entry.path(), dir / "b");
    if (!fs::exists(dir / "a" / rel)) out.fail(rel.string() + " only in second run");
  }
  if (compared == 0) out.fail("no report files written");
  if (out.ok) out.detail = std::to_string(compared) + " files byte-identical";
  fs::remove_all(dir);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: %s <path-to-metafuse-cli>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const std::vector<Criterion> criteria = {
      {"softmax_stability", 1.0, softmax_properties},
      {"gradient_check", 10.0, gradient_check},
      {"trainer_convergence", 30.0, trainer_convergence},
      {"metric_oracle", 10.0, metric_oracle},
      {"auroc_ties", 5.0, auroc_oracle},
      {"metadata_codec_round_trip", 5.0, codec_round_trip},
      {"augmentation_geometry", 5.0, augmentation_geometry},
      {"synthetic_fusion_benefit", 120.0, synthetic_directional},
      {"end_to_end_determinism", 120.0, [&] { return end_to_end_determinism(cli); }},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.budget_seconds) o.fail("took " + fmt("%.2f", secs) + " s, budget " + fmt("%.0f", c.budget_seconds) + " s");
    failures += !o.ok;
    std::printf("%s %s [%.2f s] %s\n", o.ok ? "PASS" : "FAIL", c.name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
