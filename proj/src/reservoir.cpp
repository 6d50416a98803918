#include "liquidstate/reservoir.hpp"

#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "liquidstate/config.hpp"
#include "liquidstate/error.hpp"

namespace liquidstate {
namespace {

bool in_grid(const Position& p, const GridDims& g) {
  return p.x >= 0 && p.x < g.x && p.y >= 0 && p.y < g.y && p.z >= 0 && p.z < g.z;
}

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

// Sorts by source and returns CSR offsets (size sources + 1).
std::vector<std::uint32_t> index_by_source(std::vector<Synapse>& synapses,
                                           int sources) {
  std::stable_sort(synapses.begin(), synapses.end(),
                   [](const Synapse& a, const Synapse& b) {
                     return a.source < b.source;
                   });
  std::vector<std::uint32_t> offsets(std::size_t(sources) + 1, 0);
  for (const auto& s : synapses) ++offsets[s.source + 1];
  std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());
  return offsets;
}

}  // namespace

PairClass pair_class(NeuronType source, NeuronType target) {
  const bool se = source == NeuronType::kExcitatory;
  const bool te = target == NeuronType::kExcitatory;
  if (se) return te ? PairClass::kEE : PairClass::kEI;
  return te ? PairClass::kIE : PairClass::kII;
}

std::string_view to_string(PairClass c) {
  switch (c) {
    case PairClass::kEE: return "EE";
    case PairClass::kEI: return "EI";
    case PairClass::kIE: return "IE";
    case PairClass::kII: return "II";
  }
  return "EE";
}

PairClass pair_class_from_string(std::string_view s) {
  for (PairClass c : kPairClasses) {
    if (to_string(c) == s) return c;
  }
  throw DataError("unknown synapse pair type '" + std::string(s) + "'");
}

double PairTable::operator[](PairClass c) const {
  switch (c) {
    case PairClass::kEE: return ee;
    case PairClass::kEI: return ei;
    case PairClass::kIE: return ie;
    case PairClass::kII: return ii;
  }
  throw DataError("unknown synapse pair type");
}

double& PairTable::operator[](PairClass c) {
  switch (c) {
    case PairClass::kEE: return ee;
    case PairClass::kEI: return ei;
    case PairClass::kIE: return ie;
    case PairClass::kII: return ii;
  }
  throw DataError("unknown synapse pair type");
}

void NeuronParams::validate() const {
  if (!(v_rest < v_thresh)) throw DataError("v_rest must be below v_thresh");
  if (!(v_reset <= v_thresh)) throw DataError("v_reset must not exceed v_thresh");
  if (!(tau_m > 0.0)) throw DataError("tau_m must be positive");
  if (!(refractory_exc > 0.0) || !(refractory_inh > 0.0)) {
    throw DataError("refractory periods must be positive");
  }
  if (!std::isfinite(resistance) || !std::isfinite(i_bias)) {
    throw DataError("resistance and bias current must be finite");
  }
}

void TopologyConfig::validate() const {
  if (n_excitatory <= 0 || n_inhibitory <= 0) {
    throw DataError("neuron counts must be positive");
  }
  if (grid.x <= 0 || grid.y <= 0 || grid.z <= 0 || grid.volume() != size()) {
    std::ostringstream msg;
    msg << "grid " << grid.x << "x" << grid.y << "x" << grid.z
        << " does not hold exactly " << size() << " neurons";
    throw DataError(msg.str());
  }
  if (!(lambda > 0.0)) throw DataError("lambda must be positive");
  for (PairClass c : kPairClasses) {
    if (!is_probability(connection_scale[c])) {
      throw DataError("connection scale for " + std::string(to_string(c)) +
                      " outside [0, 1]");
    }
    if (!(gamma_shape[c] > 0.0)) {
      throw DataError("gamma shape for " + std::string(to_string(c)) +
                      " must be positive");
    }
  }
  if (!(gamma_shape_input_exc > 0.0) || !(gamma_shape_input_inh > 0.0)) {
    throw DataError("input gamma shapes must be positive");
  }
  if (!is_probability(input_pool_fraction) || !is_probability(input_keep_prob)) {
    throw DataError("input pool fraction and keep probability must be in [0, 1]");
  }
  if (!(gamma_scale > 0.0) || !std::isfinite(gamma_scale)) {
    throw DataError("gamma scale must be positive");
  }
  if (input_width <= 0) throw DataError("input width must be positive");
}

double squared_distance(const Position& a, const Position& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

double connection_probability(const Position& a, const Position& b, PairClass pair,
                              const TopologyConfig& cfg) {
  const double d2 = squared_distance(a, b);
  return cfg.connection_scale[pair] * std::exp(-d2 / (cfg.lambda * cfg.lambda));
}

ReservoirTopology::ReservoirTopology(TopologyConfig config,
                                     std::vector<Position> positions,
                                     std::vector<NeuronType> types,
                                     std::vector<Synapse> recurrent,
                                     std::vector<Synapse> input)
    : config_(std::move(config)),
      positions_(std::move(positions)),
      types_(std::move(types)),
      recurrent_(std::move(recurrent)),
      input_(std::move(input)) {
  config_.validate();
  const int n = config_.size();
  if (int(types_.size()) != n || int(positions_.size()) != n) {
    throw DataError("topology holds " + std::to_string(types_.size()) +
                    " neurons, config expects " + std::to_string(n));
  }
  const auto n_exc = std::count(types_.begin(), types_.end(), NeuronType::kExcitatory);
  if (n_exc != config_.n_excitatory) {
    throw DataError("topology excitatory count does not match its config");
  }
  for (const auto& p : positions_) {
    if (!in_grid(p, config_.grid)) throw DataError("neuron position outside grid");
  }
  for (const auto& s : recurrent_) {
    if (s.source >= std::uint32_t(n) || s.target >= std::uint32_t(n)) {
      throw DataError("synapse endpoint out of range");
    }
    if (s.source == s.target) {
      throw DataError("self-synapse on neuron " + std::to_string(s.source));
    }
    const bool exc = types_[s.source] == NeuronType::kExcitatory;
    if (!std::isfinite(s.weight) || (exc && s.weight < 0.0) ||
        (!exc && s.weight > 0.0)) {
      throw DataError("synapse " + std::to_string(s.source) + "->" +
                      std::to_string(s.target) + " has a weight of the wrong sign");
    }
  }
  for (const auto& s : input_) {
    if (s.source >= std::uint32_t(config_.input_width) ||
        s.target >= std::uint32_t(n)) {
      throw DataError("input synapse endpoint out of range");
    }
    if (!std::isfinite(s.weight) || s.weight < 0.0) {
      throw DataError("input synapse weights must be non-negative");
    }
  }
  recurrent_offsets_ = index_by_source(recurrent_, n);
  input_offsets_ = index_by_source(input_, config_.input_width);
}

std::span<const Synapse> ReservoirTopology::outgoing(int neuron) const {
  const auto b = recurrent_offsets_[std::size_t(neuron)];
  const auto e = recurrent_offsets_[std::size_t(neuron) + 1];
  return std::span<const Synapse>(recurrent_).subspan(b, e - b);
}

std::span<const Synapse> ReservoirTopology::input_fanout(int input_row) const {
  const auto b = input_offsets_[std::size_t(input_row)];
  const auto e = input_offsets_[std::size_t(input_row) + 1];
  return std::span<const Synapse>(input_).subspan(b, e - b);
}

ReservoirTopology build_topology(const TopologyConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const int n = cfg.size();

  std::vector<Position> positions;
  positions.reserve(std::size_t(n));
  for (int x = 0; x < cfg.grid.x; ++x) {
    for (int y = 0; y < cfg.grid.y; ++y) {
      for (int z = 0; z < cfg.grid.z; ++z) positions.push_back({x, y, z});
    }
  }

  std::vector<NeuronType> types(std::size_t(n), NeuronType::kInhibitory);
  std::fill_n(types.begin(), cfg.n_excitatory, NeuronType::kExcitatory);
  std::shuffle(types.begin(), types.end(), rng);

  // exp(-D^2 / lambda^2) only depends on the integer D^2.
  const int max_d2 = (cfg.grid.x - 1) * (cfg.grid.x - 1) +
                     (cfg.grid.y - 1) * (cfg.grid.y - 1) +
                     (cfg.grid.z - 1) * (cfg.grid.z - 1);
  std::vector<double> falloff(std::size_t(max_d2) + 1);
  for (int d2 = 0; d2 <= max_d2; ++d2) {
    falloff[std::size_t(d2)] = std::exp(-double(d2) / (cfg.lambda * cfg.lambda));
  }

  std::array<std::gamma_distribution<double>, 4> recurrent_gamma = {
      std::gamma_distribution<double>(cfg.gamma_shape.ee, 1.0),
      std::gamma_distribution<double>(cfg.gamma_shape.ei, 1.0),
      std::gamma_distribution<double>(cfg.gamma_shape.ie, 1.0),
      std::gamma_distribution<double>(cfg.gamma_shape.ii, 1.0)};

  std::vector<Synapse> recurrent;
  for (int a = 0; a < n; ++a) {
    const auto& pa = positions[std::size_t(a)];
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const auto& pb = positions[std::size_t(b)];
      const int dx = pa.x - pb.x, dy = pa.y - pb.y, dz = pa.z - pb.z;
      const PairClass pc = pair_class(types[std::size_t(a)], types[std::size_t(b)]);
      const double p =
          cfg.connection_scale[pc] * falloff[std::size_t(dx * dx + dy * dy + dz * dz)];
      if (uniform(rng) >= p) continue;
      double w = recurrent_gamma[std::size_t(pc)](rng) * cfg.gamma_scale;
      if (types[std::size_t(a)] == NeuronType::kInhibitory) w = -w;
      recurrent.push_back({std::uint32_t(a), std::uint32_t(b), w});
    }
  }

  std::vector<std::uint32_t> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), 0u);
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::size_t(std::floor(cfg.input_pool_fraction * n)));
  std::sort(pool.begin(), pool.end());

  std::gamma_distribution<double> input_gamma_exc(cfg.gamma_shape_input_exc, 1.0);
  std::gamma_distribution<double> input_gamma_inh(cfg.gamma_shape_input_inh, 1.0);
  std::vector<Synapse> input;
  for (int row = 0; row < cfg.input_width; ++row) {
    for (std::uint32_t target : pool) {
      if (uniform(rng) >= cfg.input_keep_prob) continue;
      auto& dist = types[target] == NeuronType::kExcitatory ? input_gamma_exc
                                                            : input_gamma_inh;
      input.push_back({std::uint32_t(row), target, dist(rng) * cfg.gamma_scale});
    }
  }

  return ReservoirTopology(cfg, std::move(positions), std::move(types),
                           std::move(recurrent), std::move(input));
}

long LiquidState::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0L);
}

LiquidState simulate(const ReservoirTopology& topology, const NeuronParams& params,
                     const EncodedSpikes& input, int window_ms, SpikeRaster* raster) {
  if (input.rows() != topology.input_width()) {
    throw DataError("spike matrix has " + std::to_string(input.rows()) +
                    " rows, reservoir expects " +
                    std::to_string(topology.input_width()));
  }
  if (window_ms <= 0) throw DataError("simulation window must be positive");
  const int n = topology.size();
  constexpr double kDt = 1.0;
  const double decay = std::exp(-kDt / params.tau_m);
  const auto types = topology.types();

  // Inputs grouped by the step in which they spike.
  std::vector<std::vector<int>> input_rows_by_bin(std::size_t(input.bins()));
  for (int r = 0; r < input.rows(); ++r) {
    const int b = input.spike_bin(r);
    if (b >= 0) input_rows_by_bin[std::size_t(b)].push_back(r);
  }

  std::vector<LifState> state(std::size_t(n), LifState{params.v_rest, 0.0});
  std::vector<double> pending(std::size_t(n), 0.0);
  std::vector<double> next(std::size_t(n), 0.0);
  std::vector<int> fired;
  fired.reserve(std::size_t(n));

  LiquidState liquid;
  liquid.counts.assign(std::size_t(n), 0);
  if (raster != nullptr) {
    raster->neurons = n;
    raster->steps = window_ms;
    raster->bits.assign(std::size_t(n) * std::size_t(window_ms), 0);
  }

  for (int t = 0; t < window_ms; ++t) {
    fired.clear();
    for (int i = 0; i < n; ++i) {
      const auto type = types[std::size_t(i)];
      const auto step = lif_advance(state[std::size_t(i)], pending[std::size_t(i)],
                                    params, params.refractory(type), decay, kDt);
      state[std::size_t(i)] = step.state;
      if (step.fired) fired.push_back(i);
    }
    std::fill(next.begin(), next.end(), 0.0);
    for (int i : fired) {
      ++liquid.counts[std::size_t(i)];
      if (raster != nullptr) {
        raster->bits[std::size_t(i) * std::size_t(window_ms) + std::size_t(t)] = 1;
      }
      for (const auto& s : topology.outgoing(i)) next[s.target] += s.weight;
    }
    if (t < input.bins()) {
      for (int row : input_rows_by_bin[std::size_t(t)]) {
        for (const auto& s : topology.input_fanout(row)) next[s.target] += s.weight;
      }
    }
    pending.swap(next);
  }
  return liquid;
}

double mean_rate_hz(const ReservoirTopology& topology, const NeuronParams& params,
                    std::span<const EncodedSpikes> batch, int window_ms) {
  if (batch.empty()) throw DataError("empty calibration batch");
  double spikes = 0.0;
  for (const auto& input : batch) {
    spikes += double(simulate(topology, params, input, window_ms).total());
  }
  const double neuron_seconds =
      double(batch.size()) * topology.size() * (window_ms / 1000.0);
  return spikes / neuron_seconds;
}

ReservoirTopology ReservoirTopology::scaled(double factor) const {
  if (!(factor > 0.0) || !std::isfinite(factor)) {
    throw DataError("weight scale factor must be positive and finite");
  }
  TopologyConfig cfg = config_;
  cfg.gamma_scale *= factor;
  auto recurrent = recurrent_;
  auto input = input_;
  for (auto& s : recurrent) s.weight *= factor;
  for (auto& s : input) s.weight *= factor;
  return ReservoirTopology(std::move(cfg), positions_, types_, std::move(recurrent),
                           std::move(input));
}

CalibrationResult calibrate_gamma_scale(const TopologyConfig& cfg,
                                        const NeuronParams& params,
                                        std::span<const EncodedSpikes> batch,
                                        const CalibrationConfig& calibration,
                                        int window_ms) {
  if (!(calibration.scale_lo > 0.0) ||
      !(calibration.scale_hi > calibration.scale_lo)) {
    throw DataError("calibration scale bracket must satisfy 0 < lo < hi");
  }
  TopologyConfig unit_cfg = cfg;
  unit_cfg.gamma_scale = 1.0;
  const auto unit = build_topology(unit_cfg);
  const auto rate_at = [&](double scale) {
    return mean_rate_hz(unit.scaled(scale), params, batch, window_ms);
  };

  double lo = std::log(calibration.scale_lo);
  double hi = std::log(calibration.scale_hi);
  CalibrationResult best{std::exp(hi), rate_at(std::exp(hi))};
  if (best.rate_hz >= calibration.target_rate_hz) {
    best = {std::exp(lo), rate_at(std::exp(lo))};
    for (int i = 0; i < calibration.iterations; ++i) {
      const double mid = 0.5 * (lo + hi);
      const double rate = rate_at(std::exp(mid));
      if (std::abs(rate - calibration.target_rate_hz) <
          std::abs(best.rate_hz - calibration.target_rate_hz)) {
        best = {std::exp(mid), rate};
      }
      if (rate < calibration.target_rate_hz) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
  }
  if (best.rate_hz < calibration.min_rate_hz || best.rate_hz > calibration.max_rate_hz) {
    std::ostringstream msg;
    msg << "gamma scale calibration reached " << best.rate_hz
        << " Hz, outside [" << calibration.min_rate_hz << ", "
        << calibration.max_rate_hz << "]";
    throw DataError(msg.str());
  }
  return best;
}

void save_topology(const ReservoirTopology& topology,
                   const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format"] = "liquidstate-topology";
  doc["version"] = 1;
  doc["config"] = topology.config();
  auto& pos = doc["positions"] = nlohmann::json::array();
  for (const auto& p : topology.positions()) pos.push_back({p.x, p.y, p.z});
  std::string types;
  for (auto t : topology.types()) types += t == NeuronType::kExcitatory ? 'E' : 'I';
  doc["types"] = types;
  const auto dump = [](std::span<const Synapse> synapses) {
    auto arr = nlohmann::json::array();
    for (const auto& s : synapses) arr.push_back({s.source, s.target, s.weight});
    return arr;
  };
  doc["synapses"] = dump(topology.synapses());
  doc["input_synapses"] = dump(topology.input_synapses());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write topology " + path.string());
  out << doc.dump() << '\n';
}

ReservoirTopology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open topology " + path.string());
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.value("format", "") != "liquidstate-topology" ||
        doc.value("version", 0) != 1) {
      throw DataError(path.string() + ": not a v1 liquidstate topology");
    }
    auto cfg = doc.at("config").get<TopologyConfig>();
    std::vector<Position> positions;
    for (const auto& p : doc.at("positions")) {
      positions.push_back({p.at(0).get<int>(), p.at(1).get<int>(), p.at(2).get<int>()});
    }
    std::vector<NeuronType> types;
    for (char c : doc.at("types").get<std::string>()) {
      if (c != 'E' && c != 'I') throw DataError("bad neuron type tag");
      types.push_back(c == 'E' ? NeuronType::kExcitatory : NeuronType::kInhibitory);
    }
    const auto read = [](const nlohmann::json& arr) {
      std::vector<Synapse> out;
      out.reserve(arr.size());
      for (const auto& s : arr) {
        out.push_back({s.at(0).get<std::uint32_t>(), s.at(1).get<std::uint32_t>(),
                       s.at(2).get<double>()});
      }
      return out;
    };
    return ReservoirTopology(std::move(cfg), std::move(positions), std::move(types),
                             read(doc.at("synapses")), read(doc.at("input_synapses")));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

}  // namespace liquidstate
