#include <doctest.h>

#include <filesystem>

#include "liquidstate/config.hpp"
#include "liquidstate/error.hpp"
#include "liquidstate/eval.hpp"

using namespace liquidstate;
using nlohmann::json;

namespace {

json::json_pointer pointer_for(const std::string& dotted) {
  std::string p = "/" + dotted;
  std::replace(p.begin(), p.end(), '.', '/');
  return json::json_pointer(p);
}

}  // namespace

TEST_CASE("provenance table matches the defaults") {
  const json defaults = RunConfig{};
  for (const auto& p : run_config_provenance()) {
    INFO(p.key);
    REQUIRE(defaults.contains(pointer_for(p.key)));
    CHECK(defaults.at(pointer_for(p.key)) == p.value);
    CHECK_FALSE(p.note.empty());
  }
  const auto annotated = annotated_run_config(RunConfig{});
  CHECK(annotated.at("provenance").at("topology.lambda").at("source") == "published");
  CHECK(annotated.at("provenance").at("neuron.tau_m").at("source") == "chosen");
}

TEST_CASE("published constants") {
  const RunConfig c;
  CHECK(c.encoding.amplitude == 30);
  CHECK(c.window_ms == 30);
  CHECK(c.topology.n_excitatory == 1600);
  CHECK(c.topology.n_inhibitory == 400);
  CHECK(c.topology.lambda == 1.6667);
  CHECK(c.topology.connection_scale == PairTable{0.3, 0.2, 0.4, 0.1});
  CHECK(c.topology.gamma_shape == PairTable{30.0, 60.0, 19.0, 19.0});
  CHECK(c.topology.input_pool_fraction == 0.30);
  CHECK(c.neuron.v_thresh == 15.0);
  CHECK(c.neuron.v_rest == 13.5);
  CHECK(c.neuron.refractory_exc == 3.0);
  CHECK(c.neuron.refractory_inh == 2.0);
}

TEST_CASE("config round trip and partial documents") {
  RunConfig c;
  c.topology.seed = 99;
  c.train.learning_rate = 0.05;
  c.normalization = NormalizationMode::kPerFrameMinMax;
  const json j = c;
  CHECK(run_config_from_json(j) == c);
  CHECK(run_config_from_json(annotated_run_config(c)) == c);

  const auto partial = run_config_from_json(json::parse(R"({"neuron": {"tau_m": 20.0}})"));
  CHECK(partial.neuron.tau_m == 20.0);
  CHECK(partial.neuron.v_thresh == 15.0);
  CHECK(partial.topology == TopologyConfig{});
}

TEST_CASE("unknown or invalid keys are rejected") {
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"nueron": {}})")), DataError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"neuron": {"tau": 1}})")), DataError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"topology": {"grid": [1, 2]}})")),
                  DataError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"window_ms": "long"})")), DataError);
  CHECK_THROWS_AS(run_config_from_json(json::parse(R"({"neuron": {"tau_m": -1}})")), DataError);
  CHECK_THROWS_AS(load_run_config("/nonexistent/config.json"), DataError);
}

TEST_CASE("shipped plans parse") {
  const std::filesystem::path dir = std::filesystem::path(LIQUIDSTATE_SOURCE_DIR) / "config";
  const auto t1 = load_plan(dir / "table1.json");
  CHECK(t1.trials.size() == 5u);
  CHECK(t1.split.kind == SplitKind::kRandomShuffle);
  CHECK(t1.dataset.filename() == "frames.csv");
  const auto t2 = load_plan(dir / "table2.json");
  CHECK(t2.trials.size() == 4u);
  CHECK(t2.split.kind == SplitKind::kBySubject);
  CHECK(t2.split.train_subjects.size() == 15u);
}
