#pragma once

// Liquid state machine: a spatially embedded population of leaky
// integrate-and-fire neurons with distance-dependent random wiring, driven
// clock-by-clock from an encoded spike matrix.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "liquidstate/encoder.hpp"

namespace liquidstate {

enum class NeuronType : std::uint8_t { kExcitatory, kInhibitory };

// Synapse class keyed by (source type, target type): EI is E -> I.
enum class PairClass { kEE, kEI, kIE, kII };

inline constexpr std::array<PairClass, 4> kPairClasses = {
    PairClass::kEE, PairClass::kEI, PairClass::kIE, PairClass::kII};

PairClass pair_class(NeuronType source, NeuronType target);
std::string_view to_string(PairClass c);
PairClass pair_class_from_string(std::string_view s);  // throws DataError

// One value per synapse class.
struct PairTable {
  double ee = 0.0;
  double ei = 0.0;
  double ie = 0.0;
  double ii = 0.0;

  double operator[](PairClass c) const;
  double& operator[](PairClass c);
  friend bool operator==(const PairTable&, const PairTable&) = default;
};

struct NeuronParams {
  double v_thresh = 15.0;  // mV
  double v_rest = 13.5;    // mV
  double v_reset = 13.5;   // mV
  double tau_m = 30.0;     // ms
  double resistance = 1.0;
  double refractory_exc = 3.0;  // ms
  double refractory_inh = 2.0;  // ms
  // Constant bias current; resistance * i_bias is the no-input equilibrium.
  double i_bias = 13.5;

  void validate() const;
  double equilibrium() const noexcept { return resistance * i_bias; }
  double refractory(NeuronType t) const noexcept {
    return t == NeuronType::kExcitatory ? refractory_exc : refractory_inh;
  }
  friend bool operator==(const NeuronParams&, const NeuronParams&) = default;
};

struct GridDims {
  int x = 20;
  int y = 10;
  int z = 10;

  long volume() const noexcept { return long(x) * y * z; }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

struct TopologyConfig {
  int n_excitatory = 1600;
  int n_inhibitory = 400;
  GridDims grid;
  double lambda = 1.6667;
  PairTable connection_scale{0.3, 0.2, 0.4, 0.1};
  double input_pool_fraction = 0.30;
  double input_keep_prob = 0.01;
  PairTable gamma_shape{30.0, 60.0, 19.0, 19.0};
  double gamma_shape_input_exc = 18.0;
  double gamma_shape_input_inh = 9.0;
  // Gamma scale shared by every weight class, in mV. Usually replaced by
  // calibrate_gamma_scale() before use.
  double gamma_scale = 0.05;
  int input_width = 190;
  std::uint64_t seed = 42;

  void validate() const;
  int size() const noexcept { return n_excitatory + n_inhibitory; }
  friend bool operator==(const TopologyConfig&, const TopologyConfig&) = default;
};

struct Position {
  int x = 0;
  int y = 0;
  int z = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

double squared_distance(const Position& a, const Position& b);

// C[pair] * exp(-D^2 / lambda^2), D the Euclidean distance.
double connection_probability(const Position& a, const Position& b, PairClass pair,
                              const TopologyConfig& cfg);

// For recurrent synapses `source` is a neuron index; for input synapses it is
// an input row of the encoded spike matrix. Weights are in mV.
struct Synapse {
  std::uint32_t source = 0;
  std::uint32_t target = 0;
  double weight = 0.0;
  friend bool operator==(const Synapse&, const Synapse&) = default;
};

// Immutable wiring. Synapses are kept sorted by source so a spike can be
// propagated by walking one contiguous range.
class ReservoirTopology {
 public:
  // Throws DataError when an invariant is violated (self-synapse, sign of a
  // weight inconsistent with its source type, position outside the grid...).
  ReservoirTopology(TopologyConfig config, std::vector<Position> positions,
                    std::vector<NeuronType> types, std::vector<Synapse> recurrent,
                    std::vector<Synapse> input);

  const TopologyConfig& config() const noexcept { return config_; }
  int size() const noexcept { return static_cast<int>(types_.size()); }
  int input_width() const noexcept { return config_.input_width; }

  std::span<const Position> positions() const noexcept { return positions_; }
  std::span<const NeuronType> types() const noexcept { return types_; }
  std::span<const Synapse> synapses() const noexcept { return recurrent_; }
  std::span<const Synapse> input_synapses() const noexcept { return input_; }

  std::span<const Synapse> outgoing(int neuron) const;
  std::span<const Synapse> input_fanout(int input_row) const;

  // Same wiring with every weight multiplied by `factor` and the config's
  // gamma_scale updated to match. From a scale-1 build this reproduces
  // build_topology at scale `factor` bit for bit.
  ReservoirTopology scaled(double factor) const;

  friend bool operator==(const ReservoirTopology& a, const ReservoirTopology& b) {
    return a.config_ == b.config_ && a.positions_ == b.positions_ &&
           a.types_ == b.types_ && a.recurrent_ == b.recurrent_ &&
           a.input_ == b.input_;
  }

 private:
  TopologyConfig config_;
  std::vector<Position> positions_;
  std::vector<NeuronType> types_;
  std::vector<Synapse> recurrent_;
  std::vector<Synapse> input_;
  std::vector<std::uint32_t> recurrent_offsets_;
  std::vector<std::uint32_t> input_offsets_;
};

// Deterministic in cfg.seed. Weight magnitudes are Gamma(shape, 1) draws
// multiplied by cfg.gamma_scale, so two configs differing only in
// gamma_scale share their wiring.
ReservoirTopology build_topology(const TopologyConfig& cfg);

struct LifState {
  double v = 13.5;
  double refractory_ms = 0.0;  // remaining clamp time
};

struct LifStep {
  LifState state;
  bool fired = false;
};

// One clock tick with a precomputed leak factor exp(-dt / tau_m).
inline LifStep lif_advance(LifState s, double synaptic_jump, const NeuronParams& p,
                           double refractory_period, double decay, double dt) {
  if (s.refractory_ms > 0.0) {
    s.v = p.v_reset;
    s.refractory_ms = std::max(0.0, s.refractory_ms - dt);
    return {s, false};
  }
  const double v_eq = p.equilibrium();
  s.v = v_eq + (s.v - v_eq) * decay + synaptic_jump;
  if (s.v >= p.v_thresh) {
    s.v = p.v_reset;
    s.refractory_ms = refractory_period;
    return {s, true};
  }
  return {s, false};
}

// One clock tick. Outside the refractory period the membrane relaxes toward
// its equilibrium with the exact exponential solution for constant input,
// then takes the summed synaptic jump. Input arriving while clamped is lost.
inline LifStep lif_step(LifState s, double synaptic_jump, const NeuronParams& p,
                        NeuronType type, double dt = 1.0) {
  return lif_advance(s, synaptic_jump, p, p.refractory(type),
                     std::exp(-dt / p.tau_m), dt);
}

// Spike counts per reservoir neuron over one window.
struct LiquidState {
  std::vector<std::uint16_t> counts;

  long total() const;
  friend bool operator==(const LiquidState&, const LiquidState&) = default;
};

// neurons x steps binary raster.
struct SpikeRaster {
  int neurons = 0;
  int steps = 0;
  std::vector<std::uint8_t> bits;  // row-major by neuron

  bool at(int neuron, int step) const {
    return bits[std::size_t(neuron) * std::size_t(steps) + std::size_t(step)] != 0;
  }
};

// Clock-driven run with dt = 1 ms. Column t of `input` and reservoir spikes
// of step t both land at step t + 1. Throws DataError if the input row count
// differs from the topology's input width.
LiquidState simulate(const ReservoirTopology& topology, const NeuronParams& params,
                     const EncodedSpikes& input, int window_ms = 30,
                     SpikeRaster* raster = nullptr);

// Mean firing rate in spikes per second per neuron over a batch.
double mean_rate_hz(const ReservoirTopology& topology, const NeuronParams& params,
                    std::span<const EncodedSpikes> batch, int window_ms = 30);

struct CalibrationConfig {
  double target_rate_hz = 20.0;
  double min_rate_hz = 5.0;
  double max_rate_hz = 50.0;
  double scale_lo = 1e-4;
  double scale_hi = 10.0;
  int iterations = 40;
  int batch_size = 32;
  friend bool operator==(const CalibrationConfig&, const CalibrationConfig&) = default;
};

struct CalibrationResult {
  double gamma_scale = 0.0;
  double rate_hz = 0.0;
};

// Bisects gamma_scale (in log space) toward the target rate. Throws
// DataError if the final rate falls outside [min_rate_hz, max_rate_hz].
CalibrationResult calibrate_gamma_scale(const TopologyConfig& cfg,
                                        const NeuronParams& params,
                                        std::span<const EncodedSpikes> batch,
                                        const CalibrationConfig& calibration,
                                        int window_ms = 30);

void save_topology(const ReservoirTopology& topology,
                   const std::filesystem::path& path);
ReservoirTopology load_topology(const std::filesystem::path& path);

}  // namespace liquidstate
