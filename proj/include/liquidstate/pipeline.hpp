#pragma once

// Frame -> feature vector routes used by the experiment trials and by
// single-frame classification.

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "liquidstate/config.hpp"
#include "liquidstate/encoder.hpp"
#include "liquidstate/readout.hpp"
#include "liquidstate/reservoir.hpp"

namespace liquidstate {

enum class PipelineKind {
  kLrRaw,         // readout on raw counts
  kLrEncoded,     // readout on the flattened cosine-rank bitmap
  kSnnLrRaw,      // raw frame binarized into bin 0, then the reservoir
  kSnnLrEncoded,  // cosine-rank spikes through the reservoir
};

struct PipelineSpec {
  PipelineKind kind = PipelineKind::kSnnLrEncoded;
  int coding_number = 1;  // ignored by the raw pipelines

  bool uses_reservoir() const noexcept {
    return kind == PipelineKind::kSnnLrRaw || kind == PipelineKind::kSnnLrEncoded;
  }
  bool uses_encoding() const noexcept {
    return kind == PipelineKind::kLrEncoded || kind == PipelineKind::kSnnLrEncoded;
  }
  // Input rows the reservoir sees: 190 * n, or 190 for binarized raw frames.
  int reservoir_input_width() const noexcept {
    return kFrameCells * (uses_encoding() ? coding_number : 1);
  }
  FeatureKind feature_kind() const noexcept;

  friend bool operator==(const PipelineSpec&, const PipelineSpec&) = default;
};

std::string_view to_string(PipelineKind kind);
PipelineKind pipeline_kind_from_string(std::string_view s);  // throws DataError

std::string encoding_label(const PipelineSpec& spec);  // "-" or "cosine-rank (n=1)"
std::string model_label(const PipelineSpec& spec);     // "LR" or "SNN+LR"

// Computes readout features for one pipeline. Holds its own reservoir copy
// when the pipeline needs one; immutable and safe to share across threads.
class FeatureExtractor {
 public:
  // Throws DataError if a reservoir pipeline gets no topology or a topology
  // of the wrong input width.
  FeatureExtractor(PipelineSpec spec, const RunConfig& config,
                   std::optional<ReservoirTopology> topology = std::nullopt);

  const PipelineSpec& spec() const noexcept { return spec_; }
  const std::optional<ReservoirTopology>& topology() const noexcept { return topology_; }
  std::size_t width() const noexcept;

  // The spike matrix fed to the reservoir (reservoir pipelines only).
  EncodedSpikes spikes(const PressureFrame& frame) const;
  std::vector<double> features(const PressureFrame& frame) const;

  // Rows in input order; `threads` > 1 splits the frames into contiguous
  // chunks, which does not change the result.
  FeatureMatrix features(std::span<const PressureFrame> frames, int threads = 1) const;

  // Echo stored in trained models so classification can rebuild the route.
  nlohmann::json describe() const;

 private:
  PipelineSpec spec_;
  EncodingConfig encoding_;
  NormalizationMode normalization_;
  int window_ms_;
  NeuronParams neuron_;
  std::optional<ReservoirTopology> topology_;
};

struct PreparedReservoir {
  ReservoirTopology topology;
  CalibrationResult calibration;
};

// Builds the reservoir for a pipeline, calibrating its gamma scale on the
// cosine-rank encoding of `calibration_frames` (so the binarized-raw route
// shares its reservoir with the encoded n=1 route).
PreparedReservoir prepare_reservoir(const RunConfig& config, const PipelineSpec& spec,
                                    std::span<const PressureFrame> calibration_frames);

// Model + route for one-frame-at-a-time inference.
class PostureClassifier {
 public:
  // Throws DataError if the model's pipeline echo and the topology disagree.
  PostureClassifier(ReadoutModel model, std::optional<ReservoirTopology> topology);

  Prediction classify(const PressureFrame& frame) const;
  const ReadoutModel& model() const noexcept { return model_; }

 private:
  ReadoutModel model_;
  FeatureExtractor extractor_;
};

}  // namespace liquidstate
