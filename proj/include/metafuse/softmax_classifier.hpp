#pragma once

// Linear K-class softmax classifier trained by full-batch gradient descent on
// the mean multinomial cross-entropy.
//
// Inputs are z-scored per column with statistics fit on the training rows.
// Training runs until the infinity norm of the parameter gradient drops below
// `gradient_tolerance` or `max_epochs` gradient evaluations have been spent.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "metafuse/kernels.hpp"
#include "metafuse/matrix.hpp"
#include "metafuse/metadata_codec.hpp"

namespace metafuse {

/// Numerically safe softmax (max-subtracted). Throws DomainError on non-finite input.
std::vector<double> softmax(std::span<const double> logits);

struct TrainConfig {
  int max_epochs = 2000;
  double gradient_tolerance = 1e-6;
  double learning_rate = 0.1;
  /// Halve the step and retry whenever a step would increase the loss.
  /// When false the step size is constant and a non-finite loss is fatal.
  bool backtracking = true;
  std::uint64_t seed = 0;
  kernels::Preference kernels = kernels::Preference::automatic;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct TrainTrace {
  std::vector<double> loss;          // loss of every accepted iterate, starting at the initial point
  int epochs = 0;                    // gradient evaluations after the initial one
  double gradient_inf_norm = 0.0;    // at the returned parameters
  double gradient_l2_norm = 0.0;
  bool converged = false;            // stopped on the gradient criterion
  int step_halvings = 0;
  double final_learning_rate = 0.0;
  double wall_seconds = 0.0;
  std::string kernel;
  int threads = 1;
  std::vector<int> empty_classes;    // classes with no training sample
};

/// Per-column affine map x -> (x - mean) / scale.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;

  static Standardizer fit(const Matrix<double>& x);
  Matrix<double> apply(const Matrix<double>& x) const;
};

/// Column layout of the design matrix the model was trained on.
struct FeatureLayout {
  std::string extractor_name;
  std::size_t image_width = 0;
  std::vector<FieldSpan> metadata_fields;  // offsets relative to the metadata block

  std::size_t metadata_width() const;
  friend bool operator==(const FeatureLayout&, const FeatureLayout&) = default;
};

struct SoftmaxModel {
  Matrix<double> weights;  // K x d, one row of coefficients per class
  std::vector<double> bias;
  Standardizer preprocess;
  std::vector<std::string> class_names;
  FeatureLayout layout;
  TrainConfig config;

  std::size_t num_features() const noexcept { return weights.cols(); }
  std::size_t num_classes() const noexcept { return weights.rows(); }
  /// Coefficient linking input column `feature` to class `klass`.
  double weight(std::size_t feature, std::size_t klass) const { return weights(klass, feature); }
};

struct TrainResult {
  SoftmaxModel model;
  TrainTrace trace;
};

/// Trains on x (N x d) with labels in [0, class_names.size()).
/// Throws DomainError for d = 0, N < K or bad labels, DivergenceError when the
/// loss becomes non-finite in constant-step mode.
TrainResult train(const Matrix<double>& x, std::span<const int> labels, const std::vector<std::string>& class_names,
                  const TrainConfig& cfg);

/// N x K class probabilities. Throws DomainError on a column-count mismatch.
Matrix<double> predict_proba(const SoftmaxModel& m, const Matrix<double>& x);

/// Row-wise argmax of predict_proba, ties to the lowest class index.
std::vector<int> predict(const SoftmaxModel& m, const Matrix<double>& x);

/// Argmax of one probability row, ties to the lowest index.
int argmax(std::span<const double> row);

/// Objective pieces, exposed for gradient checking. Parameters are packed as
/// [W row-major (K x d), b (K)] and operate on already standardized inputs.
struct Objective {
  double loss = 0.0;
  std::vector<double> gradient;
};

Objective cross_entropy_objective(const Matrix<double>& xs, std::span<const int> labels, std::size_t num_classes,
                                  std::span<const double> params, const kernels::KernelSet& k);

inline constexpr std::string_view kModelMagic = "MFSMODEL";
inline constexpr std::uint32_t kModelFormatVersion = 1;

void save_model(const SoftmaxModel& m, const std::filesystem::path& path);
SoftmaxModel load_model(const std::filesystem::path& path);

}  // namespace metafuse
