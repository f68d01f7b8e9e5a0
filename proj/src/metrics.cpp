#include "metafuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "metafuse/error.hpp"

namespace metafuse {

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < k_; ++i) t += at(i, i);
  return t;
}

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t k) {
  if (y_true.size() != y_pred.size()) throw DomainError("confusion: label vectors differ in length");
  ConfusionMatrix cm(k);
  const auto in_range = [k](int v) { return v >= 0 && static_cast<std::size_t>(v) < k; };
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (!in_range(y_true[i]) || !in_range(y_pred[i])) {
      throw DomainError("confusion: label outside [0, " + std::to_string(k) + ") at index " + std::to_string(i));
    }
    ++cm.at(static_cast<std::size_t>(y_true[i]), static_cast<std::size_t>(y_pred[i]));
  }
  return cm;
}

ClassMetrics binary_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn) {
  ClassMetrics m{tp, fp, tn, fn, {}, false};
  const auto ratio = [&m](double num, double den) {
    if (den == 0.0) {
      m.degenerate = true;
      return 0.0;
    }
    return num / den;
  };
  const double TP = static_cast<double>(tp);
  const double FP = static_cast<double>(fp);
  const double TN = static_cast<double>(tn);
  const double FN = static_cast<double>(fn);

  auto& v = m.values;
  v[Metric::accuracy] = ratio(TP + TN, TP + TN + FP + FN);
  v[Metric::sensitivity] = ratio(TP, TP + FN);
  v[Metric::specificity] = ratio(TN, TN + FP);
  v[Metric::precision] = ratio(TP, TP + FP);
  v[Metric::npv] = ratio(TN, TN + FN);
  const double prec = v[Metric::precision];
  const double sens = v[Metric::sensitivity];
  v[Metric::f_measure] = ratio(2.0 * prec * sens, prec + sens);
  v[Metric::informedness] = sens + v[Metric::specificity] - 1.0;
  v[Metric::markedness] = prec + v[Metric::npv] - 1.0;
  const double den = std::sqrt((TP + FP) * (TP + FN)) * std::sqrt((TN + FP) * (TN + FN));
  v[Metric::mcc] = std::clamp(ratio(TP * TN - FP * FN, den), -1.0, 1.0);
  return m;
}

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c) {
  if (c >= cm.classes()) throw DomainError("class index out of range");
  std::uint64_t tp = cm.at(c, c);
  std::uint64_t fn = 0, fp = 0;
  for (std::size_t j = 0; j < cm.classes(); ++j) {
    if (j == c) continue;
    fn += cm.at(c, j);
    fp += cm.at(j, c);
  }
  const std::uint64_t tn = cm.total() - tp - fn - fp;
  return binary_metrics(tp, fp, tn, fn);
}

MetricValues macro_average(std::span<const ClassMetrics> per_class) {
  if (per_class.empty()) throw DomainError("macro average of an empty list");
  MetricValues out;
  for (const auto& m : per_class) {
    for (std::size_t i = 0; i < kMetricCount; ++i) out.v[i] += m.values.v[i];
  }
  for (double& x : out.v) x /= static_cast<double>(per_class.size());
  return out;
}

RocCurve roc_auroc(std::span<const double> scores, std::span<const std::uint8_t> positives) {
  if (scores.size() != positives.size()) throw DomainError("roc: scores and labels differ in length");
  std::uint64_t pos = 0;
  for (auto p : positives) pos += p ? 1 : 0;
  const std::uint64_t neg = positives.size() - pos;
  if (pos == 0 || neg == 0) throw DomainError("roc: undefined without both positive and negative samples");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve roc;
  roc.points.push_back({0.0, 0.0});
  roc.thresholds.push_back(std::numeric_limits<double>::infinity());

  // Twice the area in units of (1/neg) x (1/pos), accumulated exactly.
  std::uint64_t doubled_area = 0;
  std::uint64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double threshold = scores[order[i]];
    const std::uint64_t tp_prev = tp, fp_prev = fp;
    while (i < order.size() && scores[order[i]] == threshold) {
      if (positives[order[i]]) {
        ++tp;
      } else {
        ++fp;
      }
      ++i;
    }
    doubled_area += (fp - fp_prev) * (tp + tp_prev);
    roc.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                          static_cast<double>(tp) / static_cast<double>(pos)});
    roc.thresholds.push_back(threshold);
  }
  roc.auroc = static_cast<double>(doubled_area) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
  return roc;
}

EvaluationReport evaluate(std::span<const int> y_true, const Matrix<double>& probabilities,
                          const std::vector<std::string>& class_names, std::string split_fingerprint,
                          std::string name) {
  const std::size_t k = class_names.size();
  if (probabilities.rows() != y_true.size() || probabilities.cols() != k) {
    throw DomainError("evaluate: probability matrix shape does not match labels/classes");
  }
  std::vector<int> y_pred(y_true.size());
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const auto row = probabilities.row(i);
    y_pred[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }

  EvaluationReport rep;
  rep.name = std::move(name);
  rep.class_names = class_names;
  rep.split_fingerprint = std::move(split_fingerprint);
  rep.confusion = confusion(y_true, y_pred, k);
  for (std::size_t c = 0; c < k; ++c) rep.per_class.push_back(class_metrics(rep.confusion, c));
  rep.macro = macro_average(rep.per_class);

  std::vector<double> scores(y_true.size());
  std::vector<std::uint8_t> positives(y_true.size());
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t c = 0; c < k; ++c) {
    for (std::size_t i = 0; i < y_true.size(); ++i) {
      scores[i] = probabilities(i, c);
      positives[i] = static_cast<std::size_t>(y_true[i]) == c ? 1 : 0;
    }
    const bool has_pos = std::find(positives.begin(), positives.end(), 1) != positives.end();
    const bool has_neg = std::find(positives.begin(), positives.end(), 0) != positives.end();
    if (has_pos && has_neg) {
      rep.roc.push_back(roc_auroc(scores, positives));
      rep.auroc.push_back(rep.roc.back().auroc);
      sum += rep.auroc.back();
      ++defined;
    } else {
      rep.roc.emplace_back();
      rep.auroc.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }
  rep.macro_auroc = defined ? sum / static_cast<double>(defined) : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

BoxSummary box_summary(std::span<const double> values) {
  std::vector<double> v;
  for (double x : values) {
    if (!std::isnan(x)) v.push_back(x);
  }
  BoxSummary b;
  b.count = v.size();
  if (v.empty()) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    b.min = b.q1 = b.median = b.q3 = b.max = nan;
    return b;
  }
  std::sort(v.begin(), v.end());
  const auto quantile = [&v](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  b.min = v.front();
  b.q1 = quantile(0.25);
  b.median = quantile(0.5);
  b.q3 = quantile(0.75);
  b.max = v.back();
  return b;
}

DeltaReport delta_report(const EvaluationReport& fused, const EvaluationReport& image_only) {
  if (fused.class_names != image_only.class_names) {
    throw ComparabilityError("delta: reports '" + fused.name + "' and '" + image_only.name +
                             "' use different class sets");
  }
  if (fused.split_fingerprint != image_only.split_fingerprint) {
    throw ComparabilityError("delta: reports '" + fused.name + "' and '" + image_only.name +
                             "' come from different splits");
  }
  DeltaReport d;
  d.fused_name = fused.name;
  d.image_only_name = image_only.name;
  d.class_names = fused.class_names;
  d.split_fingerprint = fused.split_fingerprint;
  for (std::size_t i = 0; i < kMetricCount; ++i) d.macro_delta.v[i] = fused.macro.v[i] - image_only.macro.v[i];
  d.macro_auroc_delta = fused.macro_auroc - image_only.macro_auroc;
  for (std::size_t c = 0; c < fused.auroc.size(); ++c) d.auroc_delta.push_back(fused.auroc[c] - image_only.auroc[c]);
  d.auroc_box = box_summary(d.auroc_delta);
  return d;
}

}  // namespace metafuse
