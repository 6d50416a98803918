#pragma once

// JSON (de)serialization of every configuration struct, and the merged
// run configuration read by the CLI. Unknown keys are rejected; missing keys
// keep their defaults, so a config file only needs the values it overrides.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "liquidstate/encoder.hpp"
#include "liquidstate/frames.hpp"
#include "liquidstate/readout.hpp"
#include "liquidstate/reservoir.hpp"
#include "liquidstate/synthgen.hpp"

namespace liquidstate {

void to_json(nlohmann::json& j, const EncodingConfig& c);
void from_json(const nlohmann::json& j, EncodingConfig& c);
void to_json(nlohmann::json& j, const NeuronParams& c);
void from_json(const nlohmann::json& j, NeuronParams& c);
void to_json(nlohmann::json& j, const PairTable& c);
void from_json(const nlohmann::json& j, PairTable& c);
void to_json(nlohmann::json& j, const GridDims& c);
void from_json(const nlohmann::json& j, GridDims& c);
void to_json(nlohmann::json& j, const TopologyConfig& c);
void from_json(const nlohmann::json& j, TopologyConfig& c);
void to_json(nlohmann::json& j, const CalibrationConfig& c);
void from_json(const nlohmann::json& j, CalibrationConfig& c);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const FrameJitter& c);
void from_json(const nlohmann::json& j, FrameJitter& c);
void to_json(nlohmann::json& j, const GeneratorConfig& c);
void from_json(const nlohmann::json& j, GeneratorConfig& c);
void to_json(nlohmann::json& j, const SubjectProfile& c);
void from_json(const nlohmann::json& j, SubjectProfile& c);

struct RunConfig {
  EncodingConfig encoding;
  NormalizationMode normalization = NormalizationMode::kFixedRange;
  int window_ms = 30;
  TopologyConfig topology;
  NeuronParams neuron;
  CalibrationConfig calibration;
  TrainConfig train;
  GeneratorConfig generator;

  void validate() const;
  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

void to_json(nlohmann::json& j, const RunConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

// Where a default comes from: a value reported for the original
// experiment, or a choice made for this implementation.
struct Provenance {
  std::string key;  // dotted path, e.g. "topology.lambda"
  bool published = false;
  nlohmann::json value;  // the default
  std::string note;
};

const std::vector<Provenance>& run_config_provenance();

// RunConfig JSON with a "provenance" object keyed by dotted path.
nlohmann::json annotated_run_config(const RunConfig& config);

// Throws DataError on unreadable files, bad JSON or unknown keys.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig run_config_from_json(const nlohmann::json& doc);

}  // namespace liquidstate
