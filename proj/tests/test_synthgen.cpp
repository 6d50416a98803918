#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "liquidstate/error.hpp"
#include "liquidstate/synthgen.hpp"

using namespace liquidstate;

namespace {

SubjectProfile quiet_profile() {
  SubjectProfile p;
  p.noise_sd = 0.0;
  p.baseline = 0.0;
  return p;
}

constexpr FrameJitter kNoJitter{0.0, 0.0};

double region_sum(const PressureFrame& f, bool seat) {
  double s = 0.0;
  for (int r = seat ? 10 : 0; r < (seat ? 19 : 10); ++r)
    for (int c = 0; c < kFrameCols; ++c) s += f.at(r, c);
  return s;
}

// Volume under a 2-D Gaussian bump, unbounded plane.
double blob_volume(const Blob& b) {
  return b.amplitude * 2.0 * std::numbers::pi * b.sigma_row * b.sigma_col;
}

double distance(const std::array<double, kFrameCells>& a, const PressureFrame& f) {
  double d = 0.0;
  for (int i = 0; i < kFrameCells; ++i) {
    const double x = a[std::size_t(i)] - f.values[std::size_t(i)];
    d += x * x;
  }
  return d;
}

}  // namespace

TEST_CASE("a weightless, noiseless subject renders an empty frame") {
  auto p = quiet_profile();
  p.weight_scale = 0.0;
  for (int id = 0; id < kNumPostures; ++id) {
    const auto f = render_posture(p, PostureLabel(id), 3);
    for (auto v : f.values) CHECK(v == 0);
  }
}

TEST_CASE("leaning forward leaves the backrest unloaded") {
  const auto& t = default_templates()[3];
  double seat = 0.0, back = 0.0;
  for (const auto& b : t.blobs) (b.region == SheetRegion::kSeat ? seat : back) += blob_volume(b);
  CHECK(back < 0.05 * seat);

  const auto f = render_posture(quiet_profile(), PostureLabel(3), 1);
  CHECK(region_sum(f, false) < 0.05 * region_sum(f, true));
  CHECK(region_sum(f, true) > 0.0);
}

TEST_CASE("reclining loads the backrest more than sitting upright") {
  const auto up = render_posture(quiet_profile(), PostureLabel(0), 1, default_templates(), kNoJitter);
  const auto back = render_posture(quiet_profile(), PostureLabel(4), 1, default_templates(), kNoJitter);
  CHECK(region_sum(back, false) > 2.0 * region_sum(up, false));
}

TEST_CASE("rendering is deterministic and stays in range") {
  SubjectProfile p;
  p.weight_scale = 1023.0;
  p.baseline = 30.0;
  for (int id = 0; id < kNumPostures; ++id) {
    const auto a = render_posture(p, PostureLabel(id), 77);
    CHECK(a == render_posture(p, PostureLabel(id), 77));
    CHECK_NOTHROW(validate(a));
    for (int r = 0; r < kFrameRows; ++r) CHECK(a.at(r, 9) == 0);
  }
  CHECK_FALSE(render_posture(p, PostureLabel(0), 1) == render_posture(p, PostureLabel(0), 2));
}

TEST_CASE("default dataset size and balance") {
  const auto ds = generate_dataset(GeneratorConfig{});
  CHECK(ds.frames.size() == 5985u);
  std::map<int, int> per_class;
  std::set<int> subjects;
  for (const auto& f : ds.frames) {
    ++per_class[f.label.id()];
    subjects.insert(f.subject_id);
  }
  CHECK(per_class.size() == 15u);
  for (const auto& [id, n] : per_class) CHECK(n == 399);
  CHECK(subjects.size() == 19u);
  int kyphotic = 0;
  for (const auto& s : ds.subjects) kyphotic += s.kyphosis;
  CHECK(kyphotic == 1);
  CHECK(ds.subjects.back().kyphosis);
  CHECK(ds.manifest.files.at(0).frame_count == 5985u);
  CHECK(ds.manifest.generator.contains("templates"));
}

TEST_CASE("generation is deterministic in the seed") {
  GeneratorConfig cfg;
  cfg.n_subjects = 2;
  cfg.frames_per_posture = 2;
  cfg.kyphosis_subject = 0;
  CHECK(generate_dataset(cfg).frames == generate_dataset(cfg).frames);
  auto other = cfg;
  other.seed = 43;
  CHECK_FALSE(generate_dataset(cfg).frames == generate_dataset(other).frames);
}

TEST_CASE("one subject, one frame per posture") {
  GeneratorConfig cfg;
  cfg.n_subjects = 1;
  cfg.frames_per_posture = 1;
  cfg.kyphosis_subject = 0;
  const auto ds = generate_dataset(cfg);
  REQUIRE(ds.frames.size() == 15u);
  for (int id = 0; id < 15; ++id) CHECK(ds.frames[std::size_t(id)].label.id() == id);
}

TEST_CASE("noiseless renders are separable by nearest class mean") {
  GeneratorConfig cfg;
  cfg.noise_sd = 0.0;
  cfg.jitter = kNoJitter;
  cfg.frames_per_posture = 1;
  cfg.n_subjects = 6;
  cfg.kyphosis_subject = 0;
  const auto ds = generate_dataset(cfg);
  std::array<std::array<double, kFrameCells>, kNumPostures> mean{};
  for (const auto& f : ds.frames)
    for (int i = 0; i < kFrameCells; ++i)
      mean[std::size_t(f.label.id())][std::size_t(i)] += f.values[std::size_t(i)] / 6.0;
  int correct = 0;
  for (const auto& f : ds.frames) {
    int best = 0;
    for (int c = 1; c < kNumPostures; ++c)
      if (distance(mean[std::size_t(c)], f) < distance(mean[std::size_t(best)], f)) best = c;
    correct += best == f.label.id();
  }
  CHECK(correct == int(ds.frames.size()));
}

TEST_CASE("subjects differ from each other") {
  const auto profiles = make_subject_profiles(GeneratorConfig{});
  REQUIRE(profiles.size() == 19u);
  std::set<double> weights;
  for (const auto& p : profiles) {
    CHECK(p.weight_scale >= 691.0);
    CHECK(p.weight_scale <= 1023.0);
    CHECK(std::abs(p.seat_shift_row) <= 0.6);
    weights.insert(p.weight_scale);
  }
  CHECK(weights.size() == 19u);
}

TEST_CASE("generator and profile validation") {
  GeneratorConfig cfg;
  cfg.kyphosis_subject = 20;
  CHECK_THROWS_AS(generate_dataset(cfg), DataError);
  cfg = GeneratorConfig{};
  cfg.baseline = 2000.0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  cfg = GeneratorConfig{};
  cfg.n_subjects = 0;
  CHECK_THROWS_AS(cfg.validate(), DataError);
  SubjectProfile p;
  p.seat_shift_col = 2.0;
  CHECK_THROWS_AS(render_posture(p, PostureLabel(0), 1), DataError);
}

TEST_CASE("templates survive a JSON round trip") {
  CHECK(templates_from_json(templates_to_json(default_templates())) == default_templates());
  auto doc = templates_to_json(default_templates());
  doc.erase("upright");
  CHECK_THROWS_AS(templates_from_json(doc), DataError);
  doc = templates_to_json(default_templates());
  doc["standing"] = nlohmann::json::array();
  CHECK_THROWS_AS(templates_from_json(doc), DataError);
}

TEST_CASE("shipped templates file matches the built-in set") {
  std::ifstream in(std::filesystem::path(LIQUIDSTATE_SOURCE_DIR) / "config" / "templates.json");
  REQUIRE(in);
  CHECK(templates_from_json(nlohmann::json::parse(in)) == default_templates());
}
