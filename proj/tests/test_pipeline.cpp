#include <doctest.h>

#include "liquidstate/error.hpp"
#include "liquidstate/pipeline.hpp"
#include "liquidstate/synthgen.hpp"

using namespace liquidstate;

namespace {

RunConfig small_config() {
  RunConfig c;
  c.topology.n_excitatory = 160;
  c.topology.n_inhibitory = 40;
  c.topology.grid = {8, 5, 5};
  c.topology.input_keep_prob = 0.2;
  c.topology.gamma_scale = 0.5;
  c.calibration.batch_size = 8;
  return c;
}

ReservoirTopology topology_for(const RunConfig& c, int width) {
  auto t = c.topology;
  t.input_width = width;
  return build_topology(t);
}

std::vector<PressureFrame> sample_frames() {
  GeneratorConfig g;
  g.n_subjects = 2;
  g.frames_per_posture = 2;
  g.kyphosis_subject = 0;
  return generate_dataset(g).frames;
}

}  // namespace

TEST_CASE("pipeline names and labels") {
  for (auto k : {PipelineKind::kLrRaw, PipelineKind::kLrEncoded, PipelineKind::kSnnLrRaw,
                 PipelineKind::kSnnLrEncoded}) {
    CHECK(pipeline_kind_from_string(to_string(k)) == k);
  }
  CHECK_THROWS_AS(pipeline_kind_from_string("svm"), DataError);
  CHECK(encoding_label({PipelineKind::kLrRaw, 3}) == "-");
  CHECK(encoding_label({PipelineKind::kSnnLrEncoded, 2}) == "cosine-rank (n=2)");
  CHECK(model_label({PipelineKind::kLrEncoded, 1}) == "LR");
  CHECK(model_label({PipelineKind::kSnnLrRaw, 1}) == "SNN+LR");
  CHECK(PipelineSpec{PipelineKind::kSnnLrRaw, 4}.reservoir_input_width() == 190);
  CHECK(PipelineSpec{PipelineKind::kSnnLrEncoded, 4}.reservoir_input_width() == 760);
}

TEST_CASE("feature widths") {
  const auto c = small_config();
  CHECK(FeatureExtractor({PipelineKind::kLrRaw, 1}, c).width() == 190u);
  CHECK(FeatureExtractor({PipelineKind::kLrEncoded, 2}, c).width() == 380u * 30u);
  CHECK(FeatureExtractor({PipelineKind::kSnnLrEncoded, 2}, c, topology_for(c, 380)).width() ==
        200u);
  const auto f = sample_frames().front();
  CHECK(FeatureExtractor({PipelineKind::kLrEncoded, 1}, c).features(f).size() == 190u * 30u);
}

TEST_CASE("reservoir pipelines need a matching topology") {
  const auto c = small_config();
  CHECK_THROWS_AS(FeatureExtractor({PipelineKind::kSnnLrEncoded, 1}, c), DataError);
  CHECK_THROWS_AS(FeatureExtractor({PipelineKind::kSnnLrEncoded, 2}, c, topology_for(c, 190)),
                  DataError);
  CHECK_NOTHROW(FeatureExtractor({PipelineKind::kSnnLrRaw, 1}, c, topology_for(c, 190)));
  CHECK_THROWS_AS(FeatureExtractor({PipelineKind::kLrEncoded, 0}, c), DataError);
}

TEST_CASE("raw frames drive the reservoir from bin 0 only") {
  const auto c = small_config();
  const FeatureExtractor ex({PipelineKind::kSnnLrRaw, 1}, c, topology_for(c, 190));
  const auto f = sample_frames().front();
  const auto s = ex.spikes(f);
  int nonzero = 0;
  for (auto v : f.values) nonzero += v != 0;
  CHECK(s.spike_count() == nonzero);
  for (int r = 0; r < s.rows(); ++r) {
    CHECK((s.spike_bin(r) == 0 || s.spike_bin(r) == EncodedSpikes::kNoSpike));
  }
}

TEST_CASE("batched features do not depend on the thread count") {
  const auto c = small_config();
  const FeatureExtractor ex({PipelineKind::kSnnLrEncoded, 2}, c, topology_for(c, 380));
  const auto frames = sample_frames();
  const auto one = ex.features(frames, 1);
  const auto four = ex.features(frames, 4);
  REQUIRE(one.rows() == frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto a = one.row(i), b = four.row(i);
    CHECK(std::equal(a.begin(), a.end(), b.begin()));
    const auto single = ex.features(frames[i]);
    CHECK(std::equal(a.begin(), a.end(), single.begin()));
  }
}

TEST_CASE("prepared reservoirs are calibrated") {
  const auto c = small_config();
  const auto frames = sample_frames();
  const auto prepared = prepare_reservoir(c, {PipelineKind::kSnnLrEncoded, 2},
                                          std::span(frames).first(8));
  CHECK(prepared.topology.input_width() == 380);
  CHECK(prepared.calibration.rate_hz >= 5.0);
  CHECK(prepared.calibration.rate_hz <= 50.0);
  CHECK(prepared.topology.config().gamma_scale == prepared.calibration.gamma_scale);
  CHECK_THROWS_AS(prepare_reservoir(c, {PipelineKind::kLrRaw, 1}, frames), DataError);
}

TEST_CASE("classifier rebuilds the training route") {
  const auto c = small_config();
  const auto frames = sample_frames();
  const auto topo = topology_for(c, 190);
  const FeatureExtractor ex({PipelineKind::kSnnLrEncoded, 1}, c, topo);
  std::vector<PostureLabel> labels;
  for (const auto& f : frames) labels.push_back(f.label);
  auto model = train_readout(ex.features(frames), labels, c.train, FeatureKind::kLiquidState);
  model.pipeline = ex.describe();

  const PostureClassifier clf(model, topo);
  for (const auto& f : frames) {
    CHECK(clf.classify(f).label == predict(model, ex.features(f)).label);
  }
  CHECK_THROWS_AS(PostureClassifier(model, std::nullopt), DataError);
  auto other = c.topology;
  other.seed = 1234;
  CHECK_THROWS_AS(PostureClassifier(model, build_topology(other)), DataError);
  auto bare = model;
  bare.pipeline = nullptr;
  CHECK_THROWS_AS(PostureClassifier(bare, topo), DataError);
}
