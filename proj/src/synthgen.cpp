#include "liquidstate/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "liquidstate/config.hpp"
#include "liquidstate/error.hpp"

namespace liquidstate {
namespace {

using nlohmann::json;

constexpr double kSeatCentreCol = 4.0;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return splitmix64(h ^ c);
}

Blob seat(double row, double col, double sr, double sc, double amp) {
  return {SheetRegion::kSeat, row, col, sr, sc, amp};
}
Blob back(double row, double col, double sr, double sc, double amp) {
  return {SheetRegion::kBackrest, row, col, sr, sc, amp};
}

// Building blocks shared by several postures.
std::vector<Blob> upright_backrest() { return {back(7.5, 4.0, 1.0, 1.8, 0.30)}; }

std::vector<Blob> reclined_backrest() {
  return {back(2.5, 2.6, 1.2, 1.0, 0.70), back(2.5, 5.4, 1.2, 1.0, 0.70),
          back(7.0, 4.0, 1.1, 1.8, 0.55)};
}

std::vector<Blob> upright_seat() {
  return {seat(2.0, 2.3, 1.1, 1.1, 1.00), seat(2.0, 5.7, 1.1, 1.1, 1.00),
          seat(5.5, 2.3, 1.6, 0.9, 0.55), seat(5.5, 5.7, 1.6, 0.9, 0.55)};
}

std::vector<Blob> reclined_seat() {
  return {seat(1.6, 2.3, 1.1, 1.1, 1.00), seat(1.6, 5.7, 1.1, 1.1, 1.00),
          seat(5.2, 2.3, 1.6, 0.9, 0.40), seat(5.2, 5.7, 1.6, 0.9, 0.40)};
}

// Left leg crossed over the right: the left thigh leaves the seat.
std::vector<Blob> left_crossed_seat(double row_shift) {
  return {seat(2.0 + row_shift, 2.4, 1.1, 1.1, 0.85),
          seat(2.0 + row_shift, 5.6, 1.1, 1.1, 1.00),
          seat(5.6 + row_shift, 5.0, 1.6, 1.0, 0.75)};
}

// Left ankle resting on the right knee: the left thigh rotates outwards.
std::vector<Blob> left_ankle_seat(double row_shift) {
  return {seat(2.0 + row_shift, 2.3, 1.2, 1.2, 1.00),
          seat(2.0 + row_shift, 5.7, 1.1, 1.1, 0.90),
          seat(4.6 + row_shift, 1.0, 1.0, 0.8, 0.30),
          seat(5.5 + row_shift, 5.7, 1.6, 0.9, 0.70),
          seat(7.3 + row_shift, 5.6, 0.8, 1.0, 0.35)};
}

std::vector<Blob> mirrored(std::vector<Blob> blobs) {
  for (auto& b : blobs) b.col = 2.0 * kSeatCentreCol - b.col;
  return blobs;
}

std::vector<Blob> concat(std::vector<Blob> a, const std::vector<Blob>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

TemplateSet build_default_templates() {
  const auto leaning_right =
      std::vector<Blob>{seat(2.0, 2.5, 1.1, 1.1, 0.45), seat(2.0, 6.0, 1.1, 1.2, 1.00),
                        seat(5.5, 2.4, 1.6, 0.9, 0.30), seat(5.5, 5.8, 1.6, 0.9, 0.60),
                        back(3.0, 6.0, 1.2, 1.1, 0.35), back(7.5, 5.0, 1.0, 1.5, 0.25)};
  const auto leading_edge =
      std::vector<Blob>{seat(5.5, 2.5, 1.0, 1.1, 0.90), seat(5.5, 5.5, 1.0, 1.1, 0.90),
                        seat(7.8, 2.3, 0.8, 0.9, 0.50), seat(7.8, 5.7, 0.8, 0.9, 0.50)};
  const auto slouching =
      std::vector<Blob>{seat(4.0, 2.5, 1.1, 1.1, 0.80), seat(4.0, 5.5, 1.1, 1.1, 0.80),
                        seat(7.0, 2.3, 1.0, 0.9, 0.40), seat(7.0, 5.7, 1.0, 0.9, 0.40),
                        back(4.0, 4.0, 1.3, 2.2, 0.50), back(9.0, 4.0, 0.8, 1.5, 0.60)};

  TemplateSet t;
  t[0].blobs = concat(upright_seat(), upright_backrest());
  t[1].blobs = leaning_right;
  t[2].blobs = mirrored(leaning_right);
  t[3].blobs = {seat(3.0, 2.4, 1.1, 1.1, 0.85), seat(3.0, 5.6, 1.1, 1.1, 0.85),
                seat(6.0, 2.3, 1.6, 0.9, 0.80), seat(6.0, 5.7, 1.6, 0.9, 0.80)};
  t[4].blobs = concat(reclined_seat(), reclined_backrest());
  t[5].blobs = concat(left_crossed_seat(0.0), upright_backrest());
  t[6].blobs = mirrored(t[5].blobs);
  t[7].blobs = concat(left_crossed_seat(-0.4), reclined_backrest());
  t[8].blobs = mirrored(t[7].blobs);
  t[9].blobs = concat(left_ankle_seat(0.0), upright_backrest());
  t[10].blobs = mirrored(t[9].blobs);
  t[11].blobs = concat(left_ankle_seat(-0.4), reclined_backrest());
  t[12].blobs = mirrored(t[11].blobs);
  t[13].blobs = leading_edge;
  t[14].blobs = slouching;
  return t;
}

bool upright_family(int id) { return id == 0 || id == 5 || id == 6 || id == 9 || id == 10; }
bool reclined_family(int id) { return id == 4 || id == 7 || id == 8 || id == 11 || id == 12; }

}  // namespace

const TemplateSet& default_templates() {
  static const TemplateSet templates = build_default_templates();
  return templates;
}

json templates_to_json(const TemplateSet& templates) {
  json doc = json::object();
  for (int id = 0; id < kNumPostures; ++id) {
    json blobs = json::array();
    for (const auto& b : templates[std::size_t(id)].blobs) {
      blobs.push_back({{"region", b.region == SheetRegion::kSeat ? "seat" : "backrest"},
                       {"row", b.row},
                       {"col", b.col},
                       {"sigma_row", b.sigma_row},
                       {"sigma_col", b.sigma_col},
                       {"amplitude", b.amplitude}});
    }
    doc[std::string(PostureLabel(id).name())] = blobs;
  }
  return doc;
}

TemplateSet templates_from_json(const json& doc) {
  if (!doc.is_object()) throw DataError("templates: expected an object keyed by posture");
  TemplateSet out;
  std::array<bool, kNumPostures> seen{};
  try {
    for (const auto& item : doc.items()) {
      const auto label = PostureLabel::from_name(item.key());
      if (!label) throw DataError("templates: unknown posture '" + item.key() + "'");
      seen[std::size_t(label->id())] = true;
      for (const auto& b : item.value()) {
        Blob blob;
        const auto region = b.at("region").get<std::string>();
        if (region != "seat" && region != "backrest") {
          throw DataError("templates: bad region '" + region + "'");
        }
        blob.region = region == "seat" ? SheetRegion::kSeat : SheetRegion::kBackrest;
        blob.row = b.at("row").get<double>();
        blob.col = b.at("col").get<double>();
        blob.sigma_row = b.at("sigma_row").get<double>();
        blob.sigma_col = b.at("sigma_col").get<double>();
        blob.amplitude = b.at("amplitude").get<double>();
        if (!(blob.sigma_row > 0.0) || !(blob.sigma_col > 0.0) || !(blob.amplitude >= 0.0)) {
          throw DataError("templates: sigmas must be positive, amplitudes non-negative");
        }
        out[std::size_t(label->id())].blobs.push_back(blob);
      }
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("templates: ") + e.what());
  }
  for (int id = 0; id < kNumPostures; ++id) {
    if (!seen[std::size_t(id)]) {
      throw DataError("templates: missing posture '" +
                      std::string(PostureLabel(id).name()) + "'");
    }
  }
  return out;
}

void SubjectProfile::validate() const {
  if (subject_id < 1) throw DataError("subject id must be >= 1");
  if (!(weight_scale >= 0.0) || !(noise_sd >= 0.0) || !(baseline >= 0.0) ||
      !(width_scale > 0.0)) {
    throw DataError("subject profile has a negative scale or noise level");
  }
  if (std::abs(seat_shift_row) > 1.5 || std::abs(seat_shift_col) > 1.5) {
    throw DataError("seat shift would push pressure blobs off the sheet");
  }
}

PressureFrame render_posture(const SubjectProfile& profile, PostureLabel label,
                             std::uint64_t seed, const TemplateSet& templates,
                             const FrameJitter& jitter) {
  profile.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Blob> blobs = templates[std::size_t(label.id())].blobs;
  if (profile.kyphosis) {
    // A rounded upper back touches the backrest even when sitting upright,
    // and presses less when reclined.
    if (upright_family(label.id())) {
      for (auto b : reclined_backrest()) {
        if (b.row < 5.0) {
          b.amplitude *= 0.8;
          blobs.push_back(b);
        }
      }
    } else if (reclined_family(label.id())) {
      for (auto& b : blobs) {
        if (b.region == SheetRegion::kBackrest) b.amplitude *= 0.85;
      }
    }
  }

  const double frame_dr = jitter.position_sd * gauss(rng);
  const double frame_dc = jitter.position_sd * gauss(rng);
  SensorSheet seat_sheet(kSeatRows, kSeatCols);
  SensorSheet back_sheet(kBackrestRows, kBackrestCols);
  std::vector<double> seat_acc(std::size_t(kSeatRows * kSeatCols), 0.0);
  std::vector<double> back_acc(std::size_t(kBackrestRows * kBackrestCols), 0.0);

  for (const auto& b : blobs) {
    const double amp = b.amplitude * std::max(0.0, 1.0 + jitter.amplitude_sd * gauss(rng));
    const double dr = 0.5 * jitter.position_sd * gauss(rng);
    const double dc = 0.5 * jitter.position_sd * gauss(rng);
    const bool on_seat = b.region == SheetRegion::kSeat;
    double row = b.row + dr + frame_dr + (on_seat ? profile.seat_shift_row : 0.0);
    double col = kSeatCentreCol + (b.col - kSeatCentreCol) * profile.width_scale + dc +
                 frame_dc + profile.seat_shift_col;
    const int rows = on_seat ? kSeatRows : kBackrestRows;
    const int cols = on_seat ? kSeatCols : kBackrestCols;
    auto& acc = on_seat ? seat_acc : back_acc;
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const double u = (r - row) / b.sigma_row;
        const double v = (c - col) / b.sigma_col;
        acc[std::size_t(r * cols + c)] += amp * std::exp(-0.5 * (u * u + v * v));
      }
    }
  }

  const auto quantize = [&](double relative) {
    double value = profile.baseline + profile.weight_scale * relative;
    if (profile.noise_sd > 0.0) value += profile.noise_sd * gauss(rng);
    return int(std::clamp(std::round(value), 0.0, double(kMaxCount)));
  };
  for (std::size_t i = 0; i < seat_acc.size(); ++i) seat_sheet.cells[i] = quantize(seat_acc[i]);
  for (std::size_t i = 0; i < back_acc.size(); ++i) back_sheet.cells[i] = quantize(back_acc[i]);

  PressureFrame frame;
  frame.values = assemble_frame(seat_sheet, back_sheet);
  frame.subject_id = profile.subject_id;
  frame.label = label;
  return frame;
}

void GeneratorConfig::validate() const {
  if (n_subjects < 1) throw DataError("n_subjects must be >= 1");
  if (frames_per_posture < 1) throw DataError("frames_per_posture must be >= 1");
  if (!(noise_sd >= 0.0)) throw DataError("noise_sd must be non-negative");
  if (!(baseline >= 0.0) || baseline > kMaxCount) throw DataError("baseline must be in [0, 1023]");
  if (kyphosis_subject < 0 || kyphosis_subject > n_subjects) {
    throw DataError("kyphosis subject " + std::to_string(kyphosis_subject) +
                    " is not one of the generated subjects");
  }
  if (!(min_peak > 0.0) || !(max_peak >= min_peak)) {
    throw DataError("peak pressure range must satisfy 0 < min <= max");
  }
  if (!(max_seat_shift >= 0.0) || max_seat_shift > 1.5) {
    throw DataError("max_seat_shift must be in [0, 1.5]");
  }
  if (!(width_spread >= 0.0)) throw DataError("width_spread must be non-negative");
}

std::vector<SubjectProfile> make_subject_profiles(const GeneratorConfig& cfg) {
  cfg.validate();
  std::vector<SubjectProfile> out;
  for (int s = 1; s <= cfg.n_subjects; ++s) {
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x5eed5ULL, std::uint64_t(s)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    SubjectProfile p;
    p.subject_id = s;
    // Skewed toward heavy sitters.
    p.weight_scale = cfg.min_peak + (cfg.max_peak - cfg.min_peak) * std::pow(unit(rng), 0.3);
    p.seat_shift_row = cfg.max_seat_shift * (2.0 * unit(rng) - 1.0);
    p.seat_shift_col = cfg.max_seat_shift * (2.0 * unit(rng) - 1.0);
    p.width_scale = std::clamp(1.0 + cfg.width_spread * gauss(rng), 0.8, 1.2);
    p.noise_sd = cfg.noise_sd;
    p.baseline = cfg.baseline;
    p.kyphosis = s == cfg.kyphosis_subject;
    out.push_back(p);
  }
  return out;
}

GeneratedDataset generate_dataset(const GeneratorConfig& cfg, const TemplateSet& templates) {
  GeneratedDataset ds;
  ds.subjects = make_subject_profiles(cfg);
  ds.frames.reserve(std::size_t(cfg.n_subjects * kNumPostures * cfg.frames_per_posture));
  for (const auto& profile : ds.subjects) {
    for (int id = 0; id < kNumPostures; ++id) {
      for (int rep = 0; rep < cfg.frames_per_posture; ++rep) {
        const auto seed = mix_seed(cfg.seed, std::uint64_t(profile.subject_id),
                                   std::uint64_t(id), std::uint64_t(rep));
        ds.frames.push_back(
            render_posture(profile, PostureLabel(id), seed, templates, cfg.jitter));
      }
    }
  }
  ds.manifest.files.push_back(describe_frames(ds.frames, "frames.csv"));
  json subjects = json::array();
  for (const auto& p : ds.subjects) subjects.push_back(p);
  ds.manifest.generator = {{"name", "gaussian-blob posture generator"},
                           {"config", cfg},
                           {"subjects", subjects},
                           {"templates", templates_to_json(templates)}};
  return ds;
}

void write_dataset(const GeneratedDataset& dataset, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
  save_frames(dataset.frames, dir / "frames.csv");
  save_manifest(dataset.manifest, dir / "manifest.json");
}

}  // namespace liquidstate
