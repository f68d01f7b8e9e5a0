#include "metafuse/softmax_classifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "binary.hpp"
#include "metafuse/error.hpp"

namespace metafuse {

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) throw DomainError("softmax of an empty vector");
  for (double z : logits) {
    if (!std::isfinite(z)) throw DomainError("softmax input is not finite");
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> out(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - top);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

void TrainConfig::validate() const {
  if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
  if (!(gradient_tolerance > 0.0)) throw ConfigError("gradient_tolerance must be > 0");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate must be > 0");
}

Standardizer Standardizer::fit(const Matrix<double>& x) {
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 1.0)};
  if (n == 0) return s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += row[j];
  }
  for (double& m : s.mean) m /= static_cast<double>(n);

  std::vector<double> var(d, 0.0);
  std::vector<bool> constant(d, true);
  const auto first = x.row(0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    for (std::size_t j = 0; j < d; ++j) {
      const double dev = row[j] - s.mean[j];
      var[j] += dev * dev;
      if (row[j] != first[j]) constant[j] = false;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(var[j] / static_cast<double>(n));
    // Columns equal up to rounding noise are treated as constant.
    if (!constant[j] && sd > 1e-12 * (1.0 + std::fabs(s.mean[j]))) s.scale[j] = sd;
  }
  return s;
}

Matrix<double> Standardizer::apply(const Matrix<double>& x) const {
  if (x.cols() != mean.size()) {
    throw DomainError("standardizer expects " + std::to_string(mean.size()) + " columns, got " +
                      std::to_string(x.cols()));
  }
  Matrix<double> out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto src = x.row(i);
    auto dst = out.row(i);
    for (std::size_t j = 0; j < x.cols(); ++j) dst[j] = (src[j] - mean[j]) / scale[j];
  }
  return out;
}

std::size_t FeatureLayout::metadata_width() const {
  std::size_t w = 0;
  for (const auto& f : metadata_fields) w += f.width;
  return w;
}

Objective cross_entropy_objective(const Matrix<double>& xs, std::span<const int> labels, std::size_t num_classes,
                                  std::span<const double> params, const kernels::KernelSet& k) {
  const std::size_t n = xs.rows();
  const std::size_t d = xs.cols();
  const std::size_t kc = num_classes;
  const double* w = params.data();
  const double* b = params.data() + kc * d;

  Objective obj;
  obj.gradient.assign(kc * d + kc, 0.0);
  double* gw = obj.gradient.data();
  double* gb = obj.gradient.data() + kc * d;

  std::vector<double> z(kc);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = xs.row(i).data();
    for (std::size_t c = 0; c < kc; ++c) z[c] = k.dot(w + c * d, x, d) + b[c];
    const auto y = static_cast<std::size_t>(labels[i]);
    const double top = *std::max_element(z.begin(), z.end());
    const double shifted_y = z[y] - top;
    double sum = 0.0;
    for (std::size_t c = 0; c < kc; ++c) {
      z[c] = std::exp(z[c] - top);
      sum += z[c];
    }
    total += std::log(sum) - shifted_y;
    for (std::size_t c = 0; c < kc; ++c) {
      const double r = z[c] / sum - (c == y ? 1.0 : 0.0);
      k.axpy(r, x, gw + c * d, d);
      gb[c] += r;
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  obj.loss = total * inv;
  for (double& g : obj.gradient) g *= inv;
  return obj;
}

namespace {

double l2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace

TrainResult train(const Matrix<double>& x, std::span<const int> labels, const std::vector<std::string>& class_names,
                  const TrainConfig& cfg) {
  cfg.validate();
  const std::size_t n = x.rows();
  const std::size_t d = x.cols();
  const std::size_t kc = class_names.size();
  if (d == 0) throw DomainError("cannot train on a design matrix with zero columns");
  if (kc < 2) throw DomainError("need at least two classes");
  if (labels.size() != n) throw DomainError("label count does not match the number of rows");
  if (n < kc) throw DomainError("need at least as many samples as classes");

  std::vector<int> counts(kc, 0);
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= kc) throw DomainError("label " + std::to_string(y) + " out of range");
    ++counts[static_cast<std::size_t>(y)];
  }

  const auto start = std::chrono::steady_clock::now();
  const kernels::KernelSet& ks = kernels::select(cfg.kernels);

  TrainResult result;
  SoftmaxModel& model = result.model;
  TrainTrace& trace = result.trace;
  trace.kernel = std::string(ks.name);
  for (std::size_t c = 0; c < kc; ++c) {
    if (counts[c] == 0) trace.empty_classes.push_back(static_cast<int>(c));
  }

  model.preprocess = Standardizer::fit(x);
  const Matrix<double> xs = model.preprocess.apply(x);

  std::vector<double> params(kc * d + kc, 0.0);
  Objective cur = cross_entropy_objective(xs, labels, kc, params, ks);
  if (!std::isfinite(cur.loss)) throw DivergenceError("initial loss is not finite", 0);
  trace.loss.push_back(cur.loss);

  double lr = cfg.learning_rate;
  std::vector<double> candidate(params.size());
  int epoch = 0;
  while (true) {
    const double gnorm = kernels::max_abs(ks, cur.gradient);
    if (gnorm < cfg.gradient_tolerance) {
      trace.converged = true;
      break;
    }
    if (epoch >= cfg.max_epochs) break;
    ++epoch;

    candidate = params;
    kernels::axpy(ks, -lr, cur.gradient, candidate);
    Objective next = cross_entropy_objective(xs, labels, kc, candidate, ks);

    if (!std::isfinite(next.loss)) {
      if (!cfg.backtracking) {
        throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch), epoch);
      }
    } else if (!cfg.backtracking || next.loss <= cur.loss) {
      params.swap(candidate);
      cur = std::move(next);
      trace.loss.push_back(cur.loss);
      continue;
    }
    lr *= 0.5;
    ++trace.step_halvings;
    if (lr < std::numeric_limits<double>::min()) {
      throw DivergenceError("step size underflowed at epoch " + std::to_string(epoch), epoch);
    }
  }

  trace.epochs = epoch;
  trace.gradient_inf_norm = kernels::max_abs(ks, cur.gradient);
  trace.gradient_l2_norm = l2(cur.gradient);
  trace.final_learning_rate = lr;

  model.weights = Matrix<double>(kc, d, std::vector<double>(params.begin(), params.begin() + static_cast<std::ptrdiff_t>(kc * d)));
  model.bias.assign(params.begin() + static_cast<std::ptrdiff_t>(kc * d), params.end());
  model.class_names = class_names;
  model.config = cfg;
  model.layout.image_width = d;
  for (double v : params) {
    if (!std::isfinite(v)) throw DivergenceError("non-finite parameter after training", epoch);
  }

  trace.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

int argmax(std::span<const double> row) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < row.size(); ++c) {
    if (row[c] > row[best]) best = c;
  }
  return static_cast<int>(best);
}

Matrix<double> predict_proba(const SoftmaxModel& m, const Matrix<double>& x) {
  if (x.cols() != m.num_features()) {
    throw DomainError("model expects " + std::to_string(m.num_features()) + " columns, got " +
                      std::to_string(x.cols()));
  }
  const kernels::KernelSet& ks = kernels::select(m.config.kernels);
  const Matrix<double> xs = m.preprocess.apply(x);
  const std::size_t kc = m.num_classes();
  Matrix<double> out(x.rows(), kc);
  std::vector<double> z(kc);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < kc; ++c) z[c] = kernels::dot(ks, m.weights.row(c), xs.row(i)) + m.bias[c];
    const auto p = softmax(z);
    std::copy(p.begin(), p.end(), out.row(i).begin());
  }
  return out;
}

std::vector<int> predict(const SoftmaxModel& m, const Matrix<double>& x) {
  const Matrix<double> p = predict_proba(m, x);
  std::vector<int> out(p.rows());
  for (std::size_t i = 0; i < p.rows(); ++i) out[i] = argmax(p.row(i));
  return out;
}

void save_model(const SoftmaxModel& m, const std::filesystem::path& path) {
  binary::Writer w;
  w.raw(kModelMagic);
  const std::size_t body_start = w.size();
  w.uint<std::uint32_t>(kModelFormatVersion);
  w.uint<std::uint64_t>(m.num_features());
  w.uint<std::uint64_t>(m.num_classes());
  for (const auto& name : m.class_names) w.string(name);
  w.string(m.layout.extractor_name);
  w.uint<std::uint64_t>(m.layout.image_width);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(m.layout.metadata_fields.size()));
  for (const auto& f : m.layout.metadata_fields) {
    w.string(f.name);
    w.uint<std::uint64_t>(f.offset);
    w.uint<std::uint64_t>(f.width);
  }
  w.uint<std::int32_t>(m.config.max_epochs);
  w.f64(m.config.gradient_tolerance);
  w.f64(m.config.learning_rate);
  w.uint<std::uint8_t>(m.config.backtracking ? 1 : 0);
  w.uint<std::uint64_t>(m.config.seed);
  for (double v : m.weights.values()) w.f64(v);
  for (double v : m.bias) w.f64(v);
  for (double v : m.preprocess.mean) w.f64(v);
  for (double v : m.preprocess.scale) w.f64(v);
  const auto crc = binary::crc32(std::span(w.buffer()).subspan(body_start));
  w.uint<std::uint32_t>(crc);
  binary::write_file(path, w.buffer());
}

SoftmaxModel load_model(const std::filesystem::path& path) {
  const auto bytes = binary::read_file(path);
  const std::string ctx = path.string();
  if (bytes.size() < kModelMagic.size() || !std::equal(kModelMagic.begin(), kModelMagic.end(), bytes.begin())) {
    throw MagicMismatchError(ctx + ": not a model file (magic mismatch)");
  }
  if (bytes.size() < kModelMagic.size() + 4) throw TruncatedError(ctx + ": truncated");
  const auto body = std::span(bytes).subspan(kModelMagic.size(), bytes.size() - kModelMagic.size() - 4);
  binary::Reader tail{std::span(bytes).subspan(bytes.size() - 4), ctx};
  if (binary::crc32(body) != tail.uint<std::uint32_t>()) throw ChecksumError(ctx + ": model checksum mismatch");

  binary::Reader r(body, ctx);
  const auto version = r.uint<std::uint32_t>();
  if (version != kModelFormatVersion) throw VersionError(ctx + ": unsupported model version " + std::to_string(version));
  const auto d = r.uint<std::uint64_t>();
  const auto kc = r.uint<std::uint64_t>();
  if (kc > r.remaining() || d > r.remaining()) throw TruncatedError(ctx + ": truncated");

  SoftmaxModel m;
  for (std::uint64_t c = 0; c < kc; ++c) m.class_names.push_back(r.string());
  m.layout.extractor_name = r.string();
  m.layout.image_width = r.uint<std::uint64_t>();
  const auto nfields = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < nfields; ++i) {
    FieldSpan f;
    f.name = r.string();
    f.offset = r.uint<std::uint64_t>();
    f.width = r.uint<std::uint64_t>();
    m.layout.metadata_fields.push_back(std::move(f));
  }
  m.config.max_epochs = r.uint<std::int32_t>();
  m.config.gradient_tolerance = r.f64();
  m.config.learning_rate = r.f64();
  m.config.backtracking = r.uint<std::uint8_t>() != 0;
  m.config.seed = r.uint<std::uint64_t>();
  if (kc * d + kc + 2 * d > r.remaining() / 8) throw TruncatedError(ctx + ": truncated parameter block");
  std::vector<double> w(kc * d);
  for (double& v : w) v = r.f64();
  m.weights = Matrix<double>(kc, d, std::move(w));
  m.bias.resize(kc);
  for (double& v : m.bias) v = r.f64();
  m.preprocess.mean.resize(d);
  for (double& v : m.preprocess.mean) v = r.f64();
  m.preprocess.scale.resize(d);
  for (double& v : m.preprocess.scale) v = r.f64();
  if (r.remaining() != 0) throw FormatError(ctx + ": trailing bytes in model file");
  if (m.layout.image_width + m.layout.metadata_width() != d) {
    throw FormatError(ctx + ": layout does not match the parameter count");
  }
  return m;
}

}  // namespace metafuse
