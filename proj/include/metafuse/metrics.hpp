#pragma once

// Confusion-matrix metrics, one-vs-rest ROC analysis and model comparisons.
//
// Per-class measures use the one-vs-rest reduction of the K x K confusion
// matrix (class c positive, every other class negative):
//
//   sensitivity  = TP / (TP + FN)          specificity = TN / (TN + FP)
//   precision    = TP / (TP + FP)          npv         = TN / (TN + FN)
//   accuracy     = (TP + TN) / N
//   f_measure    = 2 * precision * sensitivity / (precision + sensitivity)
//   informedness = sensitivity + specificity - 1
//   markedness   = precision + npv - 1
//   mcc          = (TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN))
//
// A 0/0 ratio is defined as 0 and sets the `degenerate` flag.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "metafuse/matrix.hpp"

namespace metafuse {

class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t k) : k_(k), counts_(k * k, 0) {}

  std::size_t classes() const noexcept { return k_; }
  std::uint64_t& at(std::size_t truth, std::size_t predicted) { return counts_[truth * k_ + predicted]; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * k_ + predicted]; }
  std::uint64_t total() const;
  std::uint64_t trace() const;

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

/// Throws DomainError when a label is outside [0, k) or lengths differ.
ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t k);

enum class Metric : std::size_t {
  accuracy,
  sensitivity,
  specificity,
  precision,
  npv,
  f_measure,
  informedness,
  markedness,
  mcc,
};

inline constexpr std::size_t kMetricCount = 9;
inline constexpr std::array<std::string_view, kMetricCount> kMetricNames = {
    "accuracy", "sensitivity", "specificity", "precision", "npv",
    "f_measure", "informedness", "markedness", "mcc"};

/// The nine measures, indexable by Metric.
struct MetricValues {
  std::array<double, kMetricCount> v{};

  double& operator[](Metric m) { return v[static_cast<std::size_t>(m)]; }
  double operator[](Metric m) const { return v[static_cast<std::size_t>(m)]; }
  double accuracy() const { return (*this)[Metric::accuracy]; }
  double sensitivity() const { return (*this)[Metric::sensitivity]; }
  double specificity() const { return (*this)[Metric::specificity]; }
  double precision() const { return (*this)[Metric::precision]; }
  double npv() const { return (*this)[Metric::npv]; }
  double f_measure() const { return (*this)[Metric::f_measure]; }
  double informedness() const { return (*this)[Metric::informedness]; }
  double markedness() const { return (*this)[Metric::markedness]; }
  double mcc() const { return (*this)[Metric::mcc]; }

  friend bool operator==(const MetricValues&, const MetricValues&) = default;
};

struct ClassMetrics {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  MetricValues values;
  bool degenerate = false;  // some ratio was 0/0
};

/// Measures from raw one-vs-rest counts.
ClassMetrics binary_metrics(std::uint64_t tp, std::uint64_t fp, std::uint64_t tn, std::uint64_t fn);

/// One-vs-rest reduction for class `c`.
ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c);

/// Unweighted mean of each measure. Throws DomainError on an empty list.
MetricValues macro_average(std::span<const ClassMetrics> per_class);

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;     // (0,0) ... (1,1)
  std::vector<double> thresholds;   // points[i] counts scores >= thresholds[i]; thresholds[0] = +inf
  double auroc = 0.0;
};

/// ROC over the distinct scores in descending order; tied scores move both
/// rates in one step, so the trapezoidal area equals P(s+ > s-) + P(s+ = s-)/2.
/// Throws DomainError unless both classes are present.
RocCurve roc_auroc(std::span<const double> scores, std::span<const std::uint8_t> positives);

struct EvaluationReport {
  std::string name;
  std::vector<std::string> class_names;
  std::string split_fingerprint;
  ConfusionMatrix confusion{0};
  std::vector<ClassMetrics> per_class;
  MetricValues macro;
  std::vector<RocCurve> roc;       // empty curve when the class is absent from the evaluated rows
  std::vector<double> auroc;       // NaN when undefined
  double macro_auroc = 0.0;        // mean over defined class AUROCs
};

/// Full report from true labels and an N x K probability matrix.
EvaluationReport evaluate(std::span<const int> y_true, const Matrix<double>& probabilities,
                          const std::vector<std::string>& class_names, std::string split_fingerprint,
                          std::string name = {});

/// Min, quartiles (linear interpolation between order statistics), median, max.
struct BoxSummary {
  std::size_t count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

/// NaN entries are ignored. An empty input yields count 0 and NaN statistics.
BoxSummary box_summary(std::span<const double> values);

struct DeltaReport {
  std::string fused_name;
  std::string image_only_name;
  std::vector<std::string> class_names;
  std::string split_fingerprint;
  MetricValues macro_delta;          // fused - image_only
  double macro_auroc_delta = 0.0;
  std::vector<double> auroc_delta;   // per class
  BoxSummary auroc_box;
};

/// Throws ComparabilityError when class sets or split fingerprints differ.
DeltaReport delta_report(const EvaluationReport& fused, const EvaluationReport& image_only);

}  // namespace metafuse
