#include "liquidstate/config.hpp"

#include <fstream>
#include <set>

#include "liquidstate/error.hpp"

namespace liquidstate {
namespace {

using nlohmann::json;

// Copies present keys into fields and rejects keys nobody asked for.
class StrictReader {
 public:
  StrictReader(const json& j, std::string context) : j_(j), context_(std::move(context)) {
    if (!j_.is_object()) throw DataError(context_ + ": expected a JSON object");
  }

  template <typename T>
  StrictReader& operator()(const char* key, T& field) {
    known_.insert(key);
    if (j_.contains(key)) {
      try {
        field = j_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw DataError(context_ + "." + key + ": " + e.what());
      }
    }
    return *this;
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!known_.count(item.key())) {
        throw DataError(context_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

 private:
  const json& j_;
  std::string context_;
  std::set<std::string> known_;
};

}  // namespace

void to_json(json& j, const EncodingConfig& c) {
  j = {{"amplitude", c.amplitude}, {"coding_number", c.coding_number}};
}
void from_json(const json& j, EncodingConfig& c) {
  StrictReader(j, "encoding")("amplitude", c.amplitude)("coding_number", c.coding_number)
      .finish();
}

void to_json(json& j, const NeuronParams& c) {
  j = {{"v_thresh", c.v_thresh},         {"v_rest", c.v_rest},
       {"v_reset", c.v_reset},           {"tau_m", c.tau_m},
       {"resistance", c.resistance},     {"refractory_exc", c.refractory_exc},
       {"refractory_inh", c.refractory_inh}, {"i_bias", c.i_bias}};
}
void from_json(const json& j, NeuronParams& c) {
  StrictReader(j, "neuron")("v_thresh", c.v_thresh)("v_rest", c.v_rest)(
      "v_reset", c.v_reset)("tau_m", c.tau_m)("resistance", c.resistance)(
      "refractory_exc", c.refractory_exc)("refractory_inh", c.refractory_inh)(
      "i_bias", c.i_bias)
      .finish();
}

void to_json(json& j, const PairTable& c) {
  j = {{"EE", c.ee}, {"EI", c.ei}, {"IE", c.ie}, {"II", c.ii}};
}
void from_json(const json& j, PairTable& c) {
  StrictReader(j, "pair table")("EE", c.ee)("EI", c.ei)("IE", c.ie)("II", c.ii).finish();
}

void to_json(json& j, const GridDims& c) { j = json::array({c.x, c.y, c.z}); }
void from_json(const json& j, GridDims& c) {
  if (!j.is_array() || j.size() != 3) throw DataError("grid: expected [x, y, z]");
  c = {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

void to_json(json& j, const TopologyConfig& c) {
  j = {{"n_excitatory", c.n_excitatory},
       {"n_inhibitory", c.n_inhibitory},
       {"grid", c.grid},
       {"lambda", c.lambda},
       {"connection_scale", c.connection_scale},
       {"input_pool_fraction", c.input_pool_fraction},
       {"input_keep_prob", c.input_keep_prob},
       {"gamma_shape", c.gamma_shape},
       {"gamma_shape_input_exc", c.gamma_shape_input_exc},
       {"gamma_shape_input_inh", c.gamma_shape_input_inh},
       {"gamma_scale", c.gamma_scale},
       {"input_width", c.input_width},
       {"seed", c.seed}};
}
void from_json(const json& j, TopologyConfig& c) {
  StrictReader(j, "topology")("n_excitatory", c.n_excitatory)(
      "n_inhibitory", c.n_inhibitory)("grid", c.grid)("lambda", c.lambda)(
      "connection_scale", c.connection_scale)("input_pool_fraction",
                                              c.input_pool_fraction)(
      "input_keep_prob", c.input_keep_prob)("gamma_shape", c.gamma_shape)(
      "gamma_shape_input_exc", c.gamma_shape_input_exc)(
      "gamma_shape_input_inh", c.gamma_shape_input_inh)("gamma_scale", c.gamma_scale)(
      "input_width", c.input_width)("seed", c.seed)
      .finish();
}

void to_json(json& j, const CalibrationConfig& c) {
  j = {{"target_rate_hz", c.target_rate_hz}, {"min_rate_hz", c.min_rate_hz},
       {"max_rate_hz", c.max_rate_hz},       {"scale_lo", c.scale_lo},
       {"scale_hi", c.scale_hi},             {"iterations", c.iterations},
       {"batch_size", c.batch_size}};
}
void from_json(const json& j, CalibrationConfig& c) {
  StrictReader(j, "calibration")("target_rate_hz", c.target_rate_hz)(
      "min_rate_hz", c.min_rate_hz)("max_rate_hz", c.max_rate_hz)(
      "scale_lo", c.scale_lo)("scale_hi", c.scale_hi)("iterations", c.iterations)(
      "batch_size", c.batch_size)
      .finish();
}

void to_json(json& j, const TrainConfig& c) {
  j = {{"learning_rate", c.learning_rate}, {"l2_penalty", c.l2_penalty},
       {"max_epochs", c.max_epochs},       {"batch_size", c.batch_size},
       {"convergence_tol", c.convergence_tol}, {"seed", c.seed}};
}
void from_json(const json& j, TrainConfig& c) {
  StrictReader(j, "train")("learning_rate", c.learning_rate)("l2_penalty", c.l2_penalty)(
      "max_epochs", c.max_epochs)("batch_size", c.batch_size)(
      "convergence_tol", c.convergence_tol)("seed", c.seed)
      .finish();
}

void to_json(json& j, const FrameJitter& c) {
  j = {{"position_sd", c.position_sd}, {"amplitude_sd", c.amplitude_sd}};
}
void from_json(const json& j, FrameJitter& c) {
  StrictReader(j, "jitter")("position_sd", c.position_sd)("amplitude_sd", c.amplitude_sd)
      .finish();
}

void to_json(json& j, const GeneratorConfig& c) {
  j = {{"n_subjects", c.n_subjects},
       {"frames_per_posture", c.frames_per_posture},
       {"seed", c.seed},
       {"noise_sd", c.noise_sd},
       {"baseline", c.baseline},
       {"kyphosis_subject", c.kyphosis_subject},
       {"min_peak", c.min_peak},
       {"max_peak", c.max_peak},
       {"max_seat_shift", c.max_seat_shift},
       {"width_spread", c.width_spread},
       {"jitter", c.jitter}};
}
void from_json(const json& j, GeneratorConfig& c) {
  StrictReader(j, "generator")("n_subjects", c.n_subjects)(
      "frames_per_posture", c.frames_per_posture)("seed", c.seed)("noise_sd", c.noise_sd)("baseline", c.baseline)(
      "kyphosis_subject", c.kyphosis_subject)("min_peak", c.min_peak)(
      "max_peak", c.max_peak)("max_seat_shift", c.max_seat_shift)(
      "width_spread", c.width_spread)("jitter", c.jitter)
      .finish();
}

void to_json(json& j, const SubjectProfile& c) {
  j = {{"subject_id", c.subject_id},   {"weight_scale", c.weight_scale},
       {"seat_shift_row", c.seat_shift_row}, {"seat_shift_col", c.seat_shift_col},
       {"width_scale", c.width_scale}, {"noise_sd", c.noise_sd},
       {"baseline", c.baseline},     {"kyphosis", c.kyphosis}};
}
void from_json(const json& j, SubjectProfile& c) {
  StrictReader(j, "subject")("subject_id", c.subject_id)("weight_scale", c.weight_scale)(
      "seat_shift_row", c.seat_shift_row)("seat_shift_col", c.seat_shift_col)(
      "width_scale", c.width_scale)("noise_sd", c.noise_sd)("baseline", c.baseline)(
      "kyphosis", c.kyphosis)
      .finish();
}

void RunConfig::validate() const {
  encoding.validate();
  topology.validate();
  neuron.validate();
  train.validate();
  generator.validate();
  if (window_ms <= 0) throw DataError("window_ms must be positive");
}

void to_json(json& j, const RunConfig& c) {
  j = {{"encoding", c.encoding},
       {"normalization", std::string(to_string(c.normalization))},
       {"window_ms", c.window_ms},
       {"topology", c.topology},
       {"neuron", c.neuron},
       {"calibration", c.calibration},
       {"train", c.train},
       {"generator", c.generator}};
}

void from_json(const json& j, RunConfig& c) {
  std::string normalization(to_string(c.normalization));
  StrictReader(j, "config")("encoding", c.encoding)("normalization", normalization)(
      "window_ms", c.window_ms)("topology", c.topology)("neuron", c.neuron)(
      "calibration", c.calibration)("train", c.train)("generator", c.generator)
      .finish();
  c.normalization = normalization_mode_from_string(normalization);
}

const std::vector<Provenance>& run_config_provenance() {
  static const std::vector<Provenance> table = {
      {"encoding.amplitude", true, 30, "reported encoder amplitude"},
      {"encoding.coding_number", true, 2, "reported best coding number"},
      {"normalization", false, "fixed_range",
       "full ADC span; the source does not fix the phase map's domain"},
      {"window_ms", true, 30, "reported simulation duration"},
      {"topology.n_excitatory", true, 1600, "reported E population"},
      {"topology.n_inhibitory", true, 400, "reported I population"},
      {"topology.grid", false, json::array({20, 10, 10}),
       "no spatial layout reported; unit lattice chosen for local wiring"},
      {"topology.lambda", true, 1.6667, "reported distance scale"},
      {"topology.connection_scale", true,
       {{"EE", 0.3}, {"EI", 0.2}, {"IE", 0.4}, {"II", 0.1}},
       "reported connection scales"},
      {"topology.input_pool_fraction", true, 0.30, "reported input pool share"},
      {"topology.input_keep_prob", true, 0.01,
       "reported 99% input synapse dropout; 0.10 matches the reported fanout of 60"},
      {"topology.gamma_shape", true,
       {{"EE", 30.0}, {"EI", 60.0}, {"IE", 19.0}, {"II", 19.0}},
       "reported gamma shapes"},
      {"topology.gamma_shape_input_exc", true, 18.0, "reported gamma shape"},
      {"topology.gamma_shape_input_inh", true, 9.0, "reported gamma shape"},
      {"topology.gamma_scale", false, 0.05,
       "not reported; replaced by activity calibration"},
      {"neuron.v_thresh", true, 15.0, "reported threshold (mV)"},
      {"neuron.v_rest", true, 13.5, "reported resting potential (mV)"},
      {"neuron.v_reset", false, 13.5, "reset to the resting potential"},
      {"neuron.tau_m", false, 30.0, "not reported; conventional LSM value"},
      {"neuron.resistance", false, 1.0, "units folded into the weights"},
      {"neuron.refractory_exc", true, 3.0, "reported E refractory period (ms)"},
      {"neuron.refractory_inh", true, 2.0, "reported I refractory period (ms)"},
      {"neuron.i_bias", false, 13.5, "bias making the resting potential an equilibrium"},
      {"calibration.target_rate_hz", false, 20.0, "middle of the 5-50 Hz band"},
      {"train.learning_rate", false, 0.1, "readout training not reported"},
      {"train.l2_penalty", false, 1e-4, "readout training not reported"},
      {"train.max_epochs", false, 300, "readout training not reported"},
      {"train.batch_size", false, 64, "readout training not reported"},
      {"generator.n_subjects", true, 19, "reported participant count"},
      {"generator.frames_per_posture", false, 21,
       "5985 frames, close to the reported 5944"},
      {"generator.noise_sd", false, 20.0, "synthetic sensor noise"},
      {"generator.baseline", false, 30.0, "synthetic unloaded-cell reading"},
      {"generator.min_peak", true, 691.0, "reported lowest peak pressure"},
      {"generator.max_peak", true, 1023.0, "reported highest peak pressure"},
      {"generator.kyphosis_subject", false, 19, "one participant with kyphosis"},
  };
  return table;
}

json annotated_run_config(const RunConfig& config) {
  json j = config;
  json prov = json::object();
  for (const auto& p : run_config_provenance()) {
    prov[p.key] = {{"source", p.published ? "published" : "chosen"}, {"note", p.note}};
  }
  j["provenance"] = prov;
  return j;
}

RunConfig run_config_from_json(const json& doc) {
  json body = doc;
  if (body.is_object()) body.erase("provenance");
  RunConfig config;
  try {
    config = body.get<RunConfig>();
  } catch (const json::exception& e) {
    throw DataError(std::string("config: ") + e.what());
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return run_config_from_json(doc);
}

}  // namespace liquidstate
