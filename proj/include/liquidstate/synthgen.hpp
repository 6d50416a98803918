#pragma once

// Synthetic pressure maps: each posture is a handful of 2-D Gaussian blobs on
// the seat and backrest sheets, varied per subject and per frame.

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include <nlohmann/json.hpp>

#include "liquidstate/frames.hpp"

namespace liquidstate {

enum class SheetRegion { kSeat, kBackrest };

// Centre in sheet coordinates (row, col); seat row 0 touches the backrest,
// backrest row 0 is the top; col 0 is the sitter's left. Sigmas in cells.
// Amplitude is relative to the subject's peak pressure.
struct Blob {
  SheetRegion region = SheetRegion::kSeat;
  double row = 0.0;
  double col = 0.0;
  double sigma_row = 1.0;
  double sigma_col = 1.0;
  double amplitude = 1.0;
  friend bool operator==(const Blob&, const Blob&) = default;
};

struct PostureTemplate {
  std::vector<Blob> blobs;
  friend bool operator==(const PostureTemplate&, const PostureTemplate&) = default;
};

using TemplateSet = std::array<PostureTemplate, kNumPostures>;

const TemplateSet& default_templates();

nlohmann::json templates_to_json(const TemplateSet& templates);
TemplateSet templates_from_json(const nlohmann::json& doc);  // throws DataError

struct SubjectProfile {
  int subject_id = 1;
  double weight_scale = 1000.0;  // ADC counts at relative amplitude 1
  double seat_shift_row = 0.0;   // cells
  double seat_shift_col = 0.0;
  double width_scale = 1.0;      // lateral spread of the left/right blobs
  double noise_sd = 20.0;        // ADC counts
  double baseline = 0.0;         // unloaded-cell reading, ADC counts
  bool kyphosis = false;

  void validate() const;
  friend bool operator==(const SubjectProfile&, const SubjectProfile&) = default;
};

// Per-frame variation within one subject.
struct FrameJitter {
  double position_sd = 0.25;   // cells
  double amplitude_sd = 0.06;  // relative
  friend bool operator==(const FrameJitter&, const FrameJitter&) = default;
};

// Deterministic in (profile, label, seed). Values are clipped to [0, 1023];
// the padding column stays 0.
PressureFrame render_posture(const SubjectProfile& profile, PostureLabel label,
                             std::uint64_t seed,
                             const TemplateSet& templates = default_templates(),
                             const FrameJitter& jitter = FrameJitter{});

struct GeneratorConfig {
  int n_subjects = 19;
  int frames_per_posture = 21;
  std::uint64_t seed = 42;
  double noise_sd = 20.0;
  double baseline = 30.0;
  int kyphosis_subject = 19;  // 0 disables
  double min_peak = 691.0;
  double max_peak = 1023.0;
  double max_seat_shift = 0.6;   // cells
  double width_spread = 0.08;    // relative sd of width_scale
  FrameJitter jitter;

  void validate() const;
  friend bool operator==(const GeneratorConfig&, const GeneratorConfig&) = default;
};

std::vector<SubjectProfile> make_subject_profiles(const GeneratorConfig& cfg);

struct GeneratedDataset {
  std::vector<PressureFrame> frames;
  std::vector<SubjectProfile> subjects;
  DatasetManifest manifest;
};

// Frames ordered by subject, then posture, then repetition.
GeneratedDataset generate_dataset(const GeneratorConfig& cfg,
                                  const TemplateSet& templates = default_templates());

// Writes <dir>/frames.csv and <dir>/manifest.json.
void write_dataset(const GeneratedDataset& dataset, const std::filesystem::path& dir);

}  // namespace liquidstate
