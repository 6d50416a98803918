#include "liquidstate/pipeline.hpp"

#include <thread>
#include <vector>

#include "liquidstate/error.hpp"

namespace liquidstate {
namespace {

PipelineSpec spec_from_echo(const nlohmann::json& echo) {
  if (!echo.is_object() || !echo.contains("pipeline")) {
    throw DataError("model carries no pipeline description");
  }
  PipelineSpec spec;
  spec.kind = pipeline_kind_from_string(echo.at("pipeline").get<std::string>());
  spec.coding_number = echo.value("coding_number", 1);
  return spec;
}

RunConfig config_from_echo(const nlohmann::json& echo) {
  RunConfig config;
  try {
    config.encoding = echo.at("encoding").get<EncodingConfig>();
    config.normalization =
        normalization_mode_from_string(echo.at("normalization").get<std::string>());
    config.window_ms = echo.at("window_ms").get<int>();
    config.neuron = echo.at("neuron").get<NeuronParams>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model pipeline description: ") + e.what());
  }
  return config;
}

}  // namespace

FeatureKind PipelineSpec::feature_kind() const noexcept {
  switch (kind) {
    case PipelineKind::kLrRaw: return FeatureKind::kRawFrame;
    case PipelineKind::kLrEncoded: return FeatureKind::kEncodedFlat;
    case PipelineKind::kSnnLrRaw:
    case PipelineKind::kSnnLrEncoded: return FeatureKind::kLiquidState;
  }
  return FeatureKind::kLiquidState;
}

std::string_view to_string(PipelineKind kind) {
  switch (kind) {
    case PipelineKind::kLrRaw: return "lr-raw";
    case PipelineKind::kLrEncoded: return "lr-encoded";
    case PipelineKind::kSnnLrRaw: return "snn-lr-raw";
    case PipelineKind::kSnnLrEncoded: return "snn-lr-encoded";
  }
  return "lr-raw";
}

PipelineKind pipeline_kind_from_string(std::string_view s) {
  for (auto k : {PipelineKind::kLrRaw, PipelineKind::kLrEncoded, PipelineKind::kSnnLrRaw,
                 PipelineKind::kSnnLrEncoded}) {
    if (to_string(k) == s) return k;
  }
  throw DataError("unknown pipeline '" + std::string(s) +
                  "' (expected lr-raw, lr-encoded, snn-lr-raw or snn-lr-encoded)");
}

std::string encoding_label(const PipelineSpec& spec) {
  if (!spec.uses_encoding()) return "-";
  return "cosine-rank (n=" + std::to_string(spec.coding_number) + ")";
}

std::string model_label(const PipelineSpec& spec) {
  return spec.uses_reservoir() ? "SNN+LR" : "LR";
}

FeatureExtractor::FeatureExtractor(PipelineSpec spec, const RunConfig& config,
                                   std::optional<ReservoirTopology> topology)
    : spec_(spec),
      encoding_(config.encoding),
      normalization_(config.normalization),
      window_ms_(config.window_ms),
      neuron_(config.neuron),
      topology_(std::move(topology)) {
  encoding_.coding_number = spec_.coding_number;
  if (spec_.uses_encoding()) encoding_.validate();
  if (spec_.coding_number < 1) throw DataError("coding number must be >= 1");
  if (spec_.uses_reservoir()) {
    neuron_.validate();
    if (!topology_) throw DataError("pipeline " + std::string(to_string(spec_.kind)) +
                                    " needs a reservoir topology");
    if (topology_->input_width() != spec_.reservoir_input_width()) {
      throw DataError("reservoir input width " + std::to_string(topology_->input_width()) +
                      " does not match pipeline width " +
                      std::to_string(spec_.reservoir_input_width()));
    }
  } else {
    topology_.reset();
  }
}

std::size_t FeatureExtractor::width() const noexcept {
  switch (spec_.kind) {
    case PipelineKind::kLrRaw: return kFrameCells;
    case PipelineKind::kLrEncoded:
      return std::size_t(encoding_.input_width()) * std::size_t(encoding_.amplitude);
    case PipelineKind::kSnnLrRaw:
    case PipelineKind::kSnnLrEncoded: return std::size_t(topology_->size());
  }
  return 0;
}

EncodedSpikes FeatureExtractor::spikes(const PressureFrame& frame) const {
  if (spec_.uses_encoding()) {
    return encode(normalize_to_phase(frame, normalization_), encoding_);
  }
  return binarize_raw(frame, encoding_.amplitude);
}

std::vector<double> FeatureExtractor::features(const PressureFrame& frame) const {
  switch (spec_.kind) {
    case PipelineKind::kLrRaw:
      return std::vector<double>(frame.values.begin(), frame.values.end());
    case PipelineKind::kLrEncoded: {
      const auto bits = spikes(frame).dense();
      return std::vector<double>(bits.begin(), bits.end());
    }
    case PipelineKind::kSnnLrRaw:
    case PipelineKind::kSnnLrEncoded: {
      const auto liquid = simulate(*topology_, neuron_, spikes(frame), window_ms_);
      return std::vector<double>(liquid.counts.begin(), liquid.counts.end());
    }
  }
  return {};
}

FeatureMatrix FeatureExtractor::features(std::span<const PressureFrame> frames,
                                         int threads) const {
  FeatureMatrix out(frames.size(), width());
  const auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto f = features(frames[i]);
      std::copy(f.begin(), f.end(), out.row(i).begin());
    }
  };
  const std::size_t n_threads =
      std::min<std::size_t>(std::size_t(std::max(threads, 1)), std::max<std::size_t>(frames.size(), 1));
  if (n_threads <= 1) {
    work(0, frames.size());
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (frames.size() + n_threads - 1) / n_threads;
  for (std::size_t t = 0; t < n_threads; ++t) {
    const std::size_t b = t * chunk;
    const std::size_t e = std::min(frames.size(), b + chunk);
    if (b < e) pool.emplace_back(work, b, e);
  }
  return out;  // jthreads join on destruction before `out` is moved out
}

nlohmann::json FeatureExtractor::describe() const {
  nlohmann::json j = {{"pipeline", std::string(to_string(spec_.kind))},
                      {"coding_number", spec_.coding_number},
                      {"encoding", encoding_},
                      {"normalization", std::string(to_string(normalization_))},
                      {"window_ms", window_ms_},
                      {"neuron", neuron_}};
  if (topology_) {
    j["topology"] = {{"seed", topology_->config().seed},
                     {"gamma_scale", topology_->config().gamma_scale},
                     {"input_width", topology_->input_width()},
                     {"neurons", topology_->size()}};
  }
  return j;
}

PreparedReservoir prepare_reservoir(const RunConfig& config, const PipelineSpec& spec,
                                    std::span<const PressureFrame> calibration_frames) {
  if (!spec.uses_reservoir()) throw DataError("pipeline has no reservoir");
  TopologyConfig topo = config.topology;
  topo.input_width = spec.reservoir_input_width();
  EncodingConfig enc = config.encoding;
  enc.coding_number = spec.uses_encoding() ? spec.coding_number : 1;
  std::vector<EncodedSpikes> batch;
  batch.reserve(calibration_frames.size());
  for (const auto& f : calibration_frames) {
    batch.push_back(encode(normalize_to_phase(f, config.normalization), enc));
  }
  const auto calibration =
      calibrate_gamma_scale(topo, config.neuron, batch, config.calibration, config.window_ms);
  topo.gamma_scale = calibration.gamma_scale;
  return {build_topology(topo), calibration};
}

PostureClassifier::PostureClassifier(ReadoutModel model,
                                     std::optional<ReservoirTopology> topology)
    : model_(std::move(model)),
      extractor_(spec_from_echo(model_.pipeline), config_from_echo(model_.pipeline),
                 std::move(topology)) {
  model_.validate();
  if (extractor_.width() != std::size_t(model_.features)) {
    throw DataError("model expects " + std::to_string(model_.features) +
                    " features, pipeline produces " + std::to_string(extractor_.width()));
  }
  const auto& echo = model_.pipeline;
  if (extractor_.topology() && echo.contains("topology")) {
    const auto& t = echo.at("topology");
    const auto& cfg = extractor_.topology()->config();
    if (t.value("seed", cfg.seed) != cfg.seed ||
        t.value("gamma_scale", cfg.gamma_scale) != cfg.gamma_scale) {
      throw DataError("topology does not match the one the model was trained on");
    }
  }
}

Prediction PostureClassifier::classify(const PressureFrame& frame) const {
  return predict(model_, extractor_.features(frame));
}

}  // namespace liquidstate
