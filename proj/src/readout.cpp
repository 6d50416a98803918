#include "liquidstate/readout.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "liquidstate/config.hpp"
#include "liquidstate/error.hpp"

namespace liquidstate {
namespace {

// Non-zero entries of each sample; liquid states and encoded bitmaps are
// mostly zeros, so the forward and backward passes walk these lists.
struct SparseRows {
  std::vector<std::size_t> offsets;
  std::vector<std::uint32_t> index;
  std::vector<double> value;

  explicit SparseRows(const FeatureMatrix& m) {
    offsets.reserve(m.rows() + 1);
    offsets.push_back(0);
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      for (std::size_t f = 0; f < row.size(); ++f) {
        if (row[f] != 0.0) {
          index.push_back(std::uint32_t(f));
          value.push_back(row[f]);
        }
      }
      offsets.push_back(index.size());
    }
  }
};

// W / sigma (stored feature-major, features x classes) and the per-class
// constant sum_f W_cf mu_f / sigma_f, so that logits of a raw sample x equal
// W z + b with z = (x - mu) / sigma.
struct FoldedWeights {
  std::vector<double> scaled;
  std::vector<double> offset;
};

// logits[c] = bias[c] - offset[c] + sum over the sample's nonzeros.
void folded_logits(const FoldedWeights& folded, const std::vector<double>& bias,
                   const SparseRows& sparse, std::size_t sample, std::span<double> logits) {
  const std::size_t nc = logits.size();
  for (std::size_t c = 0; c < nc; ++c) logits[c] = bias[c] - folded.offset[c];
  for (auto k = sparse.offsets[sample]; k < sparse.offsets[sample + 1]; ++k) {
    const double x = sparse.value[k];
    const double* a = &folded.scaled[std::size_t(sparse.index[k]) * nc];
    for (std::size_t c = 0; c < nc; ++c) logits[c] += a[c] * x;
  }
}

FoldedWeights fold(const std::vector<double>& weights, const FeatureStats& stats,
                   int classes, std::size_t features) {
  FoldedWeights out{std::vector<double>(weights.size()),
                    std::vector<double>(std::size_t(classes), 0.0)};
  for (int c = 0; c < classes; ++c) {
    double off = 0.0;
    for (std::size_t f = 0; f < features; ++f) {
      const double a = weights[std::size_t(c) * features + f] / stats.scale[f];
      out.scaled[f * std::size_t(classes) + std::size_t(c)] = a;
      off += a * stats.mean[f];
    }
    out.offset[std::size_t(c)] = off;
  }
  return out;
}

void softmax_in_place(std::span<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (double& x : v) x /= sum;
}

double l2_term(const std::vector<double>& w, double l2) {
  double sq = 0.0;
  for (double x : w) sq += x * x;
  return 0.5 * l2 * sq;
}

double dataset_loss(const SparseRows& sparse, std::span<const int> cls,
                    const ReadoutModel& model) {
  const auto folded = fold(model.weights, model.stats, model.classes,
                           std::size_t(model.features));
  std::vector<double> logits(std::size_t(model.classes));
  double loss = 0.0;
  for (std::size_t i = 0; i + 1 < sparse.offsets.size(); ++i) {
    folded_logits(folded, model.bias, sparse, i, logits);
    softmax_in_place(logits);
    loss -= std::log(std::max(logits[std::size_t(cls[i])], 1e-300));
  }
  return loss / double(cls.size()) + l2_term(model.weights, model.train_config.l2_penalty);
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kLiquidState: return "liquid_state";
    case FeatureKind::kRawFrame: return "raw_frame";
    case FeatureKind::kEncodedFlat: return "encoded_flat";
  }
  return "liquid_state";
}

FeatureKind feature_kind_from_string(std::string_view s) {
  if (s == "liquid_state") return FeatureKind::kLiquidState;
  if (s == "raw_frame") return FeatureKind::kRawFrame;
  if (s == "encoded_flat") return FeatureKind::kEncodedFlat;
  throw DataError("unknown feature kind '" + std::string(s) + "'");
}

void FeatureMatrix::push_back(std::span<const double> values) {
  if (cols_ == 0 && data_.empty()) cols_ = values.size();
  if (values.size() != cols_) {
    throw DataError("feature vector of length " + std::to_string(values.size()) +
                    ", expected " + std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
}

FeatureMatrix FeatureMatrix::from_rows(const std::vector<std::vector<double>>& rows) {
  FeatureMatrix m;
  for (const auto& r : rows) m.push_back(r);
  return m;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw DataError("learning rate must be positive");
  if (!(l2_penalty >= 0.0)) throw DataError("l2 penalty must be non-negative");
  if (max_epochs < 1) throw DataError("max_epochs must be >= 1");
  if (batch_size < 1) throw DataError("batch_size must be >= 1");
  if (!(convergence_tol > 0.0)) throw DataError("convergence tolerance must be positive");
}

FeatureStats compute_feature_stats(const FeatureMatrix& features) {
  const std::size_t n = features.rows();
  const std::size_t nf = features.cols();
  FeatureStats stats{std::vector<double>(nf, 0.0), std::vector<double>(nf, 0.0)};
  if (n == 0) throw DataError("cannot compute statistics of an empty feature set");
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = features.row(r);
    for (std::size_t f = 0; f < nf; ++f) stats.mean[f] += row[f];
  }
  for (double& m : stats.mean) m /= double(n);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = features.row(r);
    for (std::size_t f = 0; f < nf; ++f) {
      const double d = row[f] - stats.mean[f];
      stats.scale[f] += d * d;
    }
  }
  for (double& s : stats.scale) {
    s = std::sqrt(s / double(n));
    if (!(s > 1e-12)) s = 1.0;  // constant column passes through unscaled
  }
  return stats;
}

void ReadoutModel::validate() const {
  if (classes < 1 || features < 1) throw DataError("model has an empty shape");
  if (weights.size() != std::size_t(classes) * std::size_t(features) ||
      bias.size() != std::size_t(classes) ||
      stats.mean.size() != std::size_t(features) ||
      stats.scale.size() != std::size_t(features)) {
    throw DataError("model arrays do not match its shape");
  }
  const auto finite = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  if (!finite(weights) || !finite(bias) || !finite(stats.mean) || !finite(stats.scale)) {
    throw DataError("model contains non-finite values");
  }
  for (double s : stats.scale) {
    if (!(s > 0.0)) throw DataError("model feature scale must be positive");
  }
}

ReadoutModel train_readout(const FeatureMatrix& features,
                           std::span<const PostureLabel> labels, const TrainConfig& cfg,
                           FeatureKind kind) {
  cfg.validate();
  const std::size_t n = features.rows();
  if (n == 0) throw DataError("no training samples");
  if (labels.size() != n) {
    throw DataError(std::to_string(n) + " feature rows but " +
                    std::to_string(labels.size()) + " labels");
  }
  std::vector<int> cls(n);
  std::set<int> distinct;
  for (std::size_t i = 0; i < n; ++i) {
    cls[i] = labels[i].id();
    distinct.insert(cls[i]);
  }
  if (distinct.size() < 2) throw DataError("training needs at least two classes");

  ReadoutModel model;
  model.classes = kNumPostures;
  model.features = int(features.cols());
  model.trained_on = kind;
  model.train_config = cfg;
  model.stats = compute_feature_stats(features);
  const std::size_t nf = features.cols();
  const int nc = model.classes;
  model.weights.assign(std::size_t(nc) * nf, 0.0);
  model.bias.assign(std::size_t(nc), 0.0);

  const SparseRows sparse(features);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);

  std::vector<double> grad_sum(std::size_t(nc) * nf);
  std::vector<double> class_sum(static_cast<std::size_t>(nc));
  std::vector<double> logits(static_cast<std::size_t>(nc));
  double previous = dataset_loss(sparse, cls, model);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < n; start += std::size_t(cfg.batch_size)) {
      const std::size_t stop = std::min(n, start + std::size_t(cfg.batch_size));
      const double batch = double(stop - start);
      const auto folded = fold(model.weights, model.stats, nc, nf);
      std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
      std::fill(class_sum.begin(), class_sum.end(), 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t i = order[k];
        folded_logits(folded, model.bias, sparse, i, logits);
        softmax_in_place(logits);
        logits[std::size_t(cls[i])] -= 1.0;  // now p - y
        for (int c = 0; c < nc; ++c) class_sum[std::size_t(c)] += logits[std::size_t(c)];
        for (auto j = sparse.offsets[i]; j < sparse.offsets[i + 1]; ++j) {
          const double x = sparse.value[j];
          double* s = &grad_sum[std::size_t(sparse.index[j]) * std::size_t(nc)];
          for (int c = 0; c < nc; ++c) s[c] += logits[std::size_t(c)] * x;
        }
      }
      // d/dW of the batch loss: (sum_i g_ic (x_if - mu_f)) / (sigma_f * B).
      for (int c = 0; c < nc; ++c) {
        const double gc = class_sum[std::size_t(c)];
        for (std::size_t f = 0; f < nf; ++f) {
          const std::size_t idx = std::size_t(c) * nf + f;
          const double grad =
              (grad_sum[f * std::size_t(nc) + std::size_t(c)] - model.stats.mean[f] * gc) /
                  (model.stats.scale[f] * batch) +
              cfg.l2_penalty * model.weights[idx];
          model.weights[idx] -= cfg.learning_rate * grad;
        }
        model.bias[std::size_t(c)] -= cfg.learning_rate * gc / batch;
      }
    }
    const double loss = dataset_loss(sparse, cls, model);
    model.loss_history.push_back(loss);
    if (std::abs(previous - loss) < cfg.convergence_tol) break;
    previous = loss;
  }
  return model;
}

std::vector<double> softmax(std::span<const double> logits) {
  if (logits.empty()) return {};
  std::vector<double> out(logits.begin(), logits.end());
  softmax_in_place(out);
  return out;
}

Prediction predict(const ReadoutModel& model, std::span<const double> feature) {
  if (feature.size() != std::size_t(model.features)) {
    throw DataError("feature vector of length " + std::to_string(feature.size()) +
                    ", model expects " + std::to_string(model.features));
  }
  const std::size_t nf = std::size_t(model.features);
  std::vector<double> z(nf);
  for (std::size_t f = 0; f < nf; ++f) {
    z[f] = (feature[f] - model.stats.mean[f]) / model.stats.scale[f];
  }
  std::vector<double> logits(std::size_t(model.classes));
  for (int c = 0; c < model.classes; ++c) {
    const double* w = &model.weights[std::size_t(c) * nf];
    double l = model.bias[std::size_t(c)];
    for (std::size_t f = 0; f < nf; ++f) l += w[f] * z[f];
    logits[std::size_t(c)] = l;
  }
  Prediction out;
  out.probabilities = softmax(logits);
  int best = 0;
  for (int c = 1; c < model.classes; ++c) {
    if (out.probabilities[std::size_t(c)] > out.probabilities[std::size_t(best)]) best = c;
  }
  out.label = PostureLabel(best);
  return out;
}

ObjectiveValue softmax_objective(std::span<const double> weights,
                                 std::span<const double> bias,
                                 const FeatureMatrix& standardized,
                                 std::span<const int> classes, int num_classes,
                                 double l2_penalty) {
  const std::size_t n = standardized.rows();
  const std::size_t nf = standardized.cols();
  const std::size_t nc = std::size_t(num_classes);
  if (weights.size() != nc * nf || bias.size() != nc || classes.size() != n || n == 0) {
    throw DataError("objective arguments have inconsistent shapes");
  }
  ObjectiveValue out{0.0, std::vector<double>(nc * nf, 0.0), std::vector<double>(nc, 0.0)};
  std::vector<double> p(nc);
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = standardized.row(i);
    for (std::size_t c = 0; c < nc; ++c) {
      double l = bias[c];
      for (std::size_t f = 0; f < nf; ++f) l += weights[c * nf + f] * z[f];
      p[c] = l;
    }
    softmax_in_place(p);
    out.loss -= std::log(p[std::size_t(classes[i])]);
    p[std::size_t(classes[i])] -= 1.0;
    for (std::size_t c = 0; c < nc; ++c) {
      out.grad_bias[c] += p[c];
      for (std::size_t f = 0; f < nf; ++f) out.grad_weights[c * nf + f] += p[c] * z[f];
    }
  }
  const double inv = 1.0 / double(n);
  out.loss *= inv;
  double sq = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    sq += weights[k] * weights[k];
    out.grad_weights[k] = out.grad_weights[k] * inv + l2_penalty * weights[k];
  }
  for (double& g : out.grad_bias) g *= inv;
  out.loss += 0.5 * l2_penalty * sq;
  return out;
}

void save_model(const ReadoutModel& model, const std::filesystem::path& path) {
  model.validate();
  nlohmann::json doc;
  doc["format"] = "liquidstate-readout";
  doc["version"] = 1;
  doc["classes"] = model.classes;
  doc["features"] = model.features;
  doc["feature_kind"] = std::string(to_string(model.trained_on));
  doc["weights"] = model.weights;
  doc["bias"] = model.bias;
  doc["feature_mean"] = model.stats.mean;
  doc["feature_scale"] = model.stats.scale;
  doc["train_config"] = model.train_config;
  doc["loss_history"] = model.loss_history;
  doc["pipeline"] = model.pipeline;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model " + path.string());
  out << doc.dump() << '\n';
}

ReadoutModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model " + path.string());
  ReadoutModel model;
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.value("format", "") != "liquidstate-readout" ||
        doc.value("version", 0) != 1) {
      throw DataError(path.string() + ": not a v1 readout model");
    }
    model.classes = doc.at("classes").get<int>();
    model.features = doc.at("features").get<int>();
    model.trained_on = feature_kind_from_string(doc.at("feature_kind").get<std::string>());
    model.weights = doc.at("weights").get<std::vector<double>>();
    model.bias = doc.at("bias").get<std::vector<double>>();
    model.stats.mean = doc.at("feature_mean").get<std::vector<double>>();
    model.stats.scale = doc.at("feature_scale").get<std::vector<double>>();
    model.train_config = doc.at("train_config").get<TrainConfig>();
    model.loss_history = doc.value("loss_history", std::vector<double>{});
    model.pipeline = doc.value("pipeline", nlohmann::json());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  model.validate();
  return model;
}

}  // namespace liquidstate
