#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>
#include <tuple>

#include "liquidstate/error.hpp"
#include "liquidstate/reservoir.hpp"

using namespace liquidstate;

namespace {

TopologyConfig dense_input(std::uint64_t seed = 7) {
  TopologyConfig cfg;
  cfg.seed = seed;
  cfg.input_keep_prob = 0.1;
  return cfg;
}

// Three-neuron chain: input row 0 -> neuron 0 -> neuron 1; neuron 2 is an
// unconnected inhibitory cell.
ReservoirTopology chain(double input_w, double link_w) {
  TopologyConfig cfg;
  cfg.n_excitatory = 2;
  cfg.n_inhibitory = 1;
  cfg.grid = {3, 1, 1};
  cfg.input_width = 1;
  return ReservoirTopology(cfg, {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}},
                           {NeuronType::kExcitatory, NeuronType::kExcitatory,
                            NeuronType::kInhibitory},
                           {{0, 1, link_w}}, {{0, 0, input_w}});
}

EncodedSpikes random_input(int rows, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> bin(-1, 29);
  EncodedSpikes s(rows, 30);
  for (int r = 0; r < rows; ++r) {
    const int b = bin(rng);
    if (b >= 0) s.set_spike(r, b);
  }
  return s;
}

// Classic fourth-order Runge-Kutta on dv/dt = (v_eq - v) / tau.
double rk4_relax(double v, double v_eq, double tau, double t, int steps) {
  const double h = t / steps;
  const auto f = [&](double x) { return (v_eq - x) / tau; };
  for (int i = 0; i < steps; ++i) {
    const double k1 = f(v);
    const double k2 = f(v + 0.5 * h * k1);
    const double k3 = f(v + 0.5 * h * k2);
    const double k4 = f(v + h * k3);
    v += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return v;
}

}  // namespace

TEST_CASE("pair classes") {
  CHECK(pair_class(NeuronType::kExcitatory, NeuronType::kInhibitory) == PairClass::kEI);
  CHECK(pair_class(NeuronType::kInhibitory, NeuronType::kExcitatory) == PairClass::kIE);
  for (auto c : kPairClasses) CHECK(pair_class_from_string(to_string(c)) == c);
  CHECK_THROWS_AS(pair_class_from_string("XX"), DataError);
}

TEST_CASE("connection probability") {
  TopologyConfig cfg;
  CHECK(connection_probability({0, 0, 0}, {0, 0, 0}, PairClass::kEE, cfg) ==
        doctest::Approx(0.3));
  cfg.lambda = 2.0;
  CHECK(connection_probability({0, 0, 0}, {2, 0, 0}, PairClass::kIE, cfg) ==
        doctest::Approx(0.4 * std::exp(-1.0)).epsilon(1e-12));
  CHECK(connection_probability({1, 2, 3}, {2, 4, 5}, PairClass::kII, cfg) ==
        doctest::Approx(0.1 * std::exp(-9.0 / 4.0)).epsilon(1e-12));
  CHECK(squared_distance({1, 2, 3}, {2, 4, 5}) == 9.0);
}

TEST_CASE("zero connection scale gives no recurrent synapses") {
  TopologyConfig cfg;
  cfg.connection_scale = {0.0, 0.0, 0.0, 0.0};
  CHECK(build_topology(cfg).synapses().empty());
}

TEST_CASE("default population and structural invariants") {
  const auto topo = build_topology(dense_input());
  CHECK(topo.size() == 2000);
  int exc = 0;
  for (auto t : topo.types()) exc += t == NeuronType::kExcitatory;
  CHECK(exc == 1600);

  std::set<std::tuple<int, int, int>> seen;
  for (const auto& p : topo.positions()) {
    CHECK(p.x >= 0);
    CHECK(p.x < 20);
    CHECK(p.y >= 0);
    CHECK(p.y < 10);
    CHECK(p.z >= 0);
    CHECK(p.z < 10);
    seen.insert({p.x, p.y, p.z});
  }
  CHECK(seen.size() == 2000u);

  std::set<std::pair<std::uint32_t, std::uint32_t>> pairs;
  for (const auto& s : topo.synapses()) {
    CHECK(s.source != s.target);
    const bool exc_src = topo.types()[s.source] == NeuronType::kExcitatory;
    CHECK((exc_src ? s.weight > 0.0 : s.weight < 0.0));
    CHECK(pairs.insert({s.source, s.target}).second);
  }
  CHECK_FALSE(topo.synapses().empty());

  std::set<std::uint32_t> pool;
  for (const auto& s : topo.input_synapses()) {
    CHECK(s.source < 190u);
    CHECK(s.weight > 0.0);
    pool.insert(s.target);
  }
  CHECK(pool.size() <= 600u);
}

TEST_CASE("fan-out ranges cover every synapse exactly once") {
  const auto topo = build_topology(dense_input());
  std::size_t total = 0;
  for (int i = 0; i < topo.size(); ++i) {
    for (const auto& s : topo.outgoing(i)) CHECK(s.source == std::uint32_t(i));
    total += topo.outgoing(i).size();
  }
  CHECK(total == topo.synapses().size());
  std::size_t inputs = 0;
  for (int r = 0; r < topo.input_width(); ++r) inputs += topo.input_fanout(r).size();
  CHECK(inputs == topo.input_synapses().size());
}

TEST_CASE("input pool is 30 percent of the population") {
  auto cfg = dense_input();
  cfg.input_keep_prob = 1.0;
  const auto topo = build_topology(cfg);
  std::set<std::uint32_t> pool;
  for (const auto& s : topo.input_synapses()) pool.insert(s.target);
  CHECK(pool.size() == 600u);
  CHECK(topo.input_synapses().size() == 600u * 190u);
}

TEST_CASE("wiring is deterministic in the seed") {
  CHECK(build_topology(dense_input(3)) == build_topology(dense_input(3)));
  CHECK_FALSE(build_topology(dense_input(3)) == build_topology(dense_input(4)));
}

TEST_CASE("scaled reproduces a build at that scale") {
  auto cfg = dense_input();
  cfg.gamma_scale = 1.0;
  const auto unit = build_topology(cfg);
  cfg.gamma_scale = 0.037;
  CHECK(unit.scaled(0.037) == build_topology(cfg));
}

TEST_CASE("topology validation") {
  TopologyConfig cfg;
  cfg.n_excitatory = 2;
  cfg.n_inhibitory = 1;
  cfg.grid = {3, 1, 1};
  cfg.input_width = 1;
  const std::vector<Position> pos = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  const std::vector<NeuronType> types = {NeuronType::kExcitatory, NeuronType::kExcitatory,
                                         NeuronType::kInhibitory};
  CHECK_THROWS_AS(ReservoirTopology(cfg, pos, types, {{1, 1, 1.0}}, {}), DataError);
  CHECK_THROWS_AS(ReservoirTopology(cfg, pos, types, {{0, 1, -1.0}}, {}), DataError);
  CHECK_THROWS_AS(ReservoirTopology(cfg, pos, types, {{2, 1, 1.0}}, {}), DataError);
  CHECK_THROWS_AS(ReservoirTopology(cfg, {{0, 0, 0}, {1, 0, 0}, {3, 0, 0}}, types, {}, {}),
                  DataError);
  CHECK_THROWS_AS(ReservoirTopology(cfg, pos, types, {}, {{1, 0, 1.0}}), DataError);
  CHECK_NOTHROW(ReservoirTopology(cfg, pos, types, {{2, 0, -0.5}}, {{0, 2, 0.0}}));

  TopologyConfig bad;
  bad.grid = {10, 10, 10};
  CHECK_THROWS_AS(build_topology(bad), DataError);
}

TEST_CASE("leak follows the exact exponential") {
  const NeuronParams p;
  const auto s = lif_step({14.5, 0.0}, 0.0, p, NeuronType::kExcitatory);
  CHECK_FALSE(s.fired);
  CHECK(s.state.v == doctest::Approx(14.4672).epsilon(1e-5));
  CHECK(std::abs(s.state.v - rk4_relax(14.5, 13.5, 30.0, 1.0, 1000)) < 1e-12);
  CHECK(std::abs(s.state.v - (13.5 + std::exp(-1.0 / 30.0))) < 1e-12);

  LifState rest{13.5, 0.0};
  for (int i = 0; i < 100; ++i) rest = lif_step(rest, 0.0, p, NeuronType::kExcitatory).state;
  CHECK(rest.v == 13.5);
}

TEST_CASE("threshold, reset and refractory clamp") {
  const NeuronParams p;
  auto s = lif_step({13.5, 0.0}, 1.5, p, NeuronType::kExcitatory);
  CHECK(s.fired);
  CHECK(s.state.v == 13.5);
  CHECK(s.state.refractory_ms == 3.0);
  for (int i = 0; i < 3; ++i) {
    s = lif_step(s.state, 100.0, p, NeuronType::kExcitatory);
    CHECK_FALSE(s.fired);
    CHECK(s.state.v == 13.5);
  }
  s = lif_step(s.state, 1.5, p, NeuronType::kExcitatory);
  CHECK(s.fired);
  CHECK(lif_step({13.5, 0.0}, 1.49, p, NeuronType::kInhibitory).fired == false);
  CHECK(lif_step({13.5, 0.0}, 2.0, p, NeuronType::kInhibitory).state.refractory_ms == 2.0);
}

TEST_CASE("a silent input leaves the reservoir silent") {
  const auto topo = build_topology(dense_input());
  const auto state = simulate(topo, NeuronParams{}, EncodedSpikes(190, 30));
  CHECK(state.total() == 0);
  CHECK(state.counts.size() == 2000u);
}

TEST_CASE("input and recurrent spikes land one step later") {
  EncodedSpikes in(1, 30);
  in.set_spike(0, 0);
  SpikeRaster raster;
  const auto state = simulate(chain(2.0, 2.0), NeuronParams{}, in, 30, &raster);
  CHECK(state.counts == std::vector<std::uint16_t>{1, 1, 0});
  CHECK(raster.at(0, 1));
  CHECK(raster.at(1, 2));
  CHECK_FALSE(raster.at(0, 0));

  EncodedSpikes late(1, 30);
  late.set_spike(0, 29);
  CHECK(simulate(chain(2.0, 2.0), NeuronParams{}, late).total() == 0);

  CHECK(simulate(chain(1.0, 2.0), NeuronParams{}, in).total() == 0);
}

TEST_CASE("spike counts respect the refractory bound") {
  auto cfg = dense_input();
  cfg.gamma_scale = 5.0;
  const auto topo = build_topology(cfg);
  const NeuronParams p;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    SpikeRaster raster;
    const auto state = simulate(topo, p, random_input(190, seed), 30, &raster);
    CHECK(state.total() > 0);
    long raster_total = 0;
    for (int i = 0; i < topo.size(); ++i) {
      // No spike at step 0; then at most one spike per refractory period + 1 ms.
      const int period = int(p.refractory(topo.types()[std::size_t(i)])) + 1;
      CHECK(state.counts[std::size_t(i)] <= 1 + (30 - 2) / period);
      int last = -100;
      for (int t = 0; t < 30; ++t) {
        if (!raster.at(i, t)) continue;
        CHECK(t - last >= period);
        last = t;
        ++raster_total;
      }
    }
    CHECK(raster_total == state.total());
  }
}

TEST_CASE("simulation is deterministic and checks its input width") {
  const auto topo = build_topology(dense_input());
  const auto in = random_input(190, 9);
  CHECK(simulate(topo, NeuronParams{}, in) == simulate(topo, NeuronParams{}, in));
  CHECK_THROWS_AS(simulate(topo, NeuronParams{}, EncodedSpikes(380, 30)), DataError);
  CHECK_THROWS_AS(simulate(topo, NeuronParams{}, in, 0), DataError);
}

TEST_CASE("calibration lands inside the rate band") {
  auto cfg = dense_input();
  std::vector<EncodedSpikes> batch;
  for (std::uint64_t s = 0; s < 4; ++s) batch.push_back(random_input(190, s));
  const auto result = calibrate_gamma_scale(cfg, NeuronParams{}, batch, CalibrationConfig{});
  CHECK(result.rate_hz >= 5.0);
  CHECK(result.rate_hz <= 50.0);
  cfg.gamma_scale = result.gamma_scale;
  CHECK(mean_rate_hz(build_topology(cfg), NeuronParams{}, batch) ==
        doctest::Approx(result.rate_hz).epsilon(1e-12));
  CHECK_THROWS_AS(
      calibrate_gamma_scale(cfg, NeuronParams{}, std::vector<EncodedSpikes>{}, CalibrationConfig{}),
      DataError);
}

TEST_CASE("topology file round trip") {
  const auto topo = build_topology(dense_input());
  const auto path = std::filesystem::temp_directory_path() / "liquidstate_topology_test.json";
  save_topology(topo, path);
  CHECK(load_topology(path) == topo);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_topology(path), DataError);
}
