#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "liquidstate/error.hpp"
#include "liquidstate/frames.hpp"

using namespace liquidstate;

namespace {

const std::string kHeader = "# pressure-frames v1 p=19 q=10\n";

PressureFrame random_frame(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> value(0, kMaxCount);
  std::uniform_int_distribution<int> label(0, kNumPostures - 1);
  std::uniform_int_distribution<int> subject(1, 19);
  PressureFrame f;
  for (auto& v : f.values) v = std::uint16_t(value(rng));
  f.label = PostureLabel(label(rng));
  f.subject_id = subject(rng);
  return f;
}

std::string record(const std::string& label, int bad_cell = -1, const std::string& bad = "") {
  std::string line = "3," + label;
  for (int i = 0; i < kFrameCells; ++i) line += "," + (i == bad_cell ? bad : std::string("7"));
  return line + "\n";
}

int parse_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    read_frames(in, "test.csv");
  } catch (const ParseError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST_CASE("posture labels are dense and uniquely named") {
  std::set<std::string_view> names;
  for (int id = 0; id < kNumPostures; ++id) {
    const PostureLabel l(id);
    CHECK(l.id() == id);
    names.insert(l.name());
    const auto back = PostureLabel::from_name(l.name());
    REQUIRE(back.has_value());
    CHECK(*back == l);
  }
  CHECK(names.size() == kNumPostures);
  CHECK(PostureLabel(0).name() == "upright");
  CHECK(PostureLabel(5).name() == "LC seated upright");
  CHECK(PostureLabel(12).name() == "RA leaning back");
  CHECK(PostureLabel(14).name() == "slouching back down");
  CHECK_THROWS_AS(PostureLabel(15), DataError);
  CHECK_THROWS_AS(PostureLabel(-1), DataError);
  CHECK_FALSE(PostureLabel::from_name("standing").has_value());
}

TEST_CASE("assembling zero sheets gives a zero frame") {
  const auto v = assemble_frame(SensorSheet(9, 9), SensorSheet(10, 9));
  CHECK(v.size() == 190);
  for (auto x : v) CHECK(x == 0);
}

TEST_CASE("assemble places one seat cell below the backrest") {
  SensorSheet seat(9, 9);
  seat.at(0, 0) = 500;
  PressureFrame f;
  f.values = assemble_frame(seat, SensorSheet(10, 9));
  CHECK(f.at(10, 0) == 500);
  for (int r = 0; r < kFrameRows; ++r) CHECK(f.at(r, 9) == 0);
}

TEST_CASE("assemble maps all 171 sensors to distinct cells") {
  // Oracle: enumerate every source cell with a distinct value and recover
  // its position by search, independent of the index helpers.
  SensorSheet seat(9, 9), back(10, 9);
  int tag = 1;
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 9; ++c) back.at(r, c) = tag++;
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 9; ++c) seat.at(r, c) = tag++;
  REQUIRE(tag == 172);
  const auto v = assemble_frame(seat, back);
  std::set<int> seen;
  for (int i = 0; i < kFrameCells; ++i) {
    const int row = i / kFrameCols, col = i % kFrameCols;
    if (col == 9) {
      CHECK(v[std::size_t(i)] == 0);
      continue;
    }
    const int t = v[std::size_t(i)];
    REQUIRE(t >= 1);
    seen.insert(t);
    if (t <= 90) {
      CHECK(row == (t - 1) / 9);
      CHECK(col == (t - 1) % 9);
      CHECK(backrest_cell_index(row, col) == i);
    } else {
      CHECK(row == 10 + (t - 91) / 9);
      CHECK(col == (t - 91) % 9);
      CHECK(seat_cell_index(row - 10, col) == i);
    }
  }
  CHECK(seen.size() == 171);
}

TEST_CASE("assemble rejects bad shapes and values") {
  CHECK_THROWS_AS(assemble_frame(SensorSheet(9, 10), SensorSheet(10, 9)), DataError);
  CHECK_THROWS_AS(assemble_frame(SensorSheet(9, 9), SensorSheet(9, 9)), DataError);
  SensorSheet seat(9, 9);
  seat.at(4, 4) = 1024;
  CHECK_THROWS_AS(assemble_frame(seat, SensorSheet(10, 9)), DataError);
  seat.at(4, 4) = -1;
  CHECK_THROWS_AS(assemble_frame(seat, SensorSheet(10, 9)), DataError);
}

TEST_CASE("fixed-range phase endpoints and monotonicity") {
  PressureFrame f;
  for (int i = 0; i < kFrameCells; ++i) f.values[std::size_t(i)] = std::uint16_t(i * 1023 / 189);
  const auto p = normalize_to_phase(f);
  CHECK(p[0] == 0.0);
  CHECK(p[189] == doctest::Approx(std::numbers::pi).epsilon(1e-15));
  for (int i = 1; i < kFrameCells; ++i) CHECK(p[std::size_t(i)] >= p[std::size_t(i - 1)]);
  for (double x : p) CHECK((x >= 0.0 && x <= std::numbers::pi));
}

TEST_CASE("per-frame min-max phase") {
  PressureFrame flat;
  flat.values.fill(512);
  for (double x : normalize_to_phase(flat, NormalizationMode::kPerFrameMinMax)) CHECK(x == 0.0);

  PressureFrame f;
  f.values.fill(100);
  f.values[3] = 300;
  f.values[7] = 200;
  const auto p = normalize_to_phase(f, NormalizationMode::kPerFrameMinMax);
  CHECK(p[0] == 0.0);
  CHECK(p[3] == doctest::Approx(std::numbers::pi));
  CHECK(p[7] == doctest::Approx(std::numbers::pi / 2));
  CHECK(normalization_mode_from_string(to_string(NormalizationMode::kPerFrameMinMax)) ==
        NormalizationMode::kPerFrameMinMax);
  CHECK_THROWS_AS(normalization_mode_from_string("zscore"), DataError);
}

TEST_CASE("empty frame file gives no frames") {
  std::istringstream in(kHeader);
  CHECK(read_frames(in).empty());
}

TEST_CASE("frames survive a save/load round trip") {
  std::mt19937_64 rng(7);
  std::vector<PressureFrame> frames;
  for (int i = 0; i < 10; ++i) frames.push_back(random_frame(rng));
  frames[0].values.fill(1023);
  frames[1].values.fill(0);
  const auto path = std::filesystem::temp_directory_path() / "liquidstate_frames_rt.csv";
  save_frames(frames, path);
  CHECK(load_frames(path) == frames);
  std::filesystem::remove(path);

  std::stringstream s;
  write_frames(s, frames);
  CHECK(read_frames(s) == frames);
}

TEST_CASE("frame file errors name the offending line") {
  CHECK(parse_error_line(kHeader + record("upright") + record("upright", 17, "1024")) == 3);
  CHECK(parse_error_line(kHeader + record("standing")) == 2);
  CHECK(parse_error_line(kHeader + record("upright", 5, "abc")) == 2);
  CHECK(parse_error_line(kHeader + record("upright", 5, "-3")) == 2);
  CHECK(parse_error_line(kHeader + "3,upright,1,2,3\n") == 2);
  CHECK(parse_error_line(kHeader + "\n" + "0" + record("upright").substr(1)) == 3);
  CHECK(parse_error_line("# something else\n") == 1);
  CHECK(parse_error_line(kHeader + record("leaning left")) == -1);

  std::istringstream in(kHeader + record("upright", 17, "1024"));
  try {
    read_frames(in, "bad.csv");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("bad.csv:2") != std::string::npos);
  }
}

TEST_CASE("frame validation") {
  PressureFrame f;
  CHECK_NOTHROW(validate(f));
  f.subject_id = 0;
  CHECK_THROWS_AS(validate(f), DataError);
  f.subject_id = 1;
  f.values[10] = 1024;
  CHECK_THROWS_AS(validate(f), DataError);
}

TEST_CASE("manifest round trip") {
  std::vector<PressureFrame> frames(4);
  frames[1].label = PostureLabel(3);
  frames[2].subject_id = 2;
  frames[3].label = PostureLabel(3);
  DatasetManifest m;
  m.files.push_back(describe_frames(frames, "frames.csv"));
  m.generator = {{"name", "test"}};
  CHECK(m.files[0].frame_count == 4);
  CHECK(m.files[0].subject_ids == std::vector<int>{1, 2});
  CHECK(m.files[0].class_counts.at("upright") == 2);
  CHECK(m.files[0].class_counts.at("leaning forward") == 2);
  const auto path = std::filesystem::temp_directory_path() / "liquidstate_manifest.json";
  save_manifest(m, path);
  CHECK(load_manifest(path) == m);
  std::filesystem::remove(path);
}
