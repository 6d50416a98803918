#pragma once

// Multinomial logistic regression over standardized feature vectors.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "liquidstate/frames.hpp"

namespace liquidstate {

enum class FeatureKind { kLiquidState, kRawFrame, kEncodedFlat };

std::string_view to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(std::string_view s);

// Dense row-major sample matrix.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(std::size_t cols) : cols_(cols) {}
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return cols_ == 0 ? 0 : data_.size() / cols_; }
  std::size_t cols() const noexcept { return cols_; }

  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }
  // Throws DataError on a length mismatch.
  void push_back(std::span<const double> values);

  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows);

 private:
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct TrainConfig {
  double learning_rate = 0.1;
  double l2_penalty = 1e-4;
  int max_epochs = 300;
  int batch_size = 64;
  double convergence_tol = 1e-6;  // on the epoch-to-epoch training loss change
  std::uint64_t seed = 42;

  void validate() const;
  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

struct FeatureStats {
  std::vector<double> mean;
  std::vector<double> scale;  // standard deviation, 1 for constant features
  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

// Training-set mean and standard deviation of every column.
FeatureStats compute_feature_stats(const FeatureMatrix& features);

struct ReadoutModel {
  int classes = kNumPostures;
  int features = 0;
  std::vector<double> weights;  // classes x features, row-major
  std::vector<double> bias;     // classes
  FeatureStats stats;
  FeatureKind trained_on = FeatureKind::kLiquidState;
  TrainConfig train_config;
  std::vector<double> loss_history;  // full-training-set loss after each epoch
  // How the features were produced (encoding, reservoir); opaque here.
  nlohmann::json pipeline;

  double weight(int cls, int feature) const {
    return weights[std::size_t(cls) * std::size_t(features) + std::size_t(feature)];
  }
  // Throws DataError if shapes or values are inconsistent.
  void validate() const;
  friend bool operator==(const ReadoutModel&, const ReadoutModel&) = default;
};

// Mini-batch gradient descent on softmax cross-entropy + L2 (weights only).
// Throws DataError on empty input, mismatched lengths or fewer than two
// distinct classes.
ReadoutModel train_readout(const FeatureMatrix& features,
                           std::span<const PostureLabel> labels,
                           const TrainConfig& cfg, FeatureKind kind);

struct Prediction {
  PostureLabel label;
  std::vector<double> probabilities;
};

// Argmax with lowest-id tie-break.
Prediction predict(const ReadoutModel& model, std::span<const double> feature);

// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> logits);

// Mean cross-entropy plus 0.5 * l2 * |W|^2 on already standardized inputs,
// with the gradient with respect to weights and bias.
struct ObjectiveValue {
  double loss = 0.0;
  std::vector<double> grad_weights;
  std::vector<double> grad_bias;
};

ObjectiveValue softmax_objective(std::span<const double> weights,
                                 std::span<const double> bias,
                                 const FeatureMatrix& standardized,
                                 std::span<const int> classes, int num_classes,
                                 double l2_penalty);

void save_model(const ReadoutModel& model, const std::filesystem::path& path);
ReadoutModel load_model(const std::filesystem::path& path);

}  // namespace liquidstate
