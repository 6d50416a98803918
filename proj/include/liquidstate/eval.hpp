#pragma once

// Train/test splits, classification metrics and the experiment runner.

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "liquidstate/config.hpp"
#include "liquidstate/frames.hpp"
#include "liquidstate/pipeline.hpp"

namespace liquidstate {

enum class SplitKind { kRandomShuffle, kBySubject };

std::string_view to_string(SplitKind kind);
SplitKind split_kind_from_string(std::string_view s);  // throws DataError

struct Split {
  SplitKind kind = SplitKind::kRandomShuffle;
  std::vector<std::size_t> train;  // ascending frame indices
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;          // random split only
  std::vector<int> train_subjects;  // by-subject split only
  std::vector<int> test_subjects;
};

// Test size is round(fraction * n). Throws DataError if the fraction is not
// in (0, 1) or either side would be empty.
Split split_random(std::span<const PressureFrame> frames, double test_fraction,
                   std::uint64_t seed);

// Test subjects default to every subject not in `train_subjects`. Throws
// DataError on unknown or overlapping subjects and on an empty side.
Split split_by_subject(std::span<const PressureFrame> frames,
                       const std::vector<int>& train_subjects,
                       const std::optional<std::vector<int>>& test_subjects = std::nullopt);

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;    // truth count
  int predicted = 0;  // prediction count
};

// Macro scores average over the classes that occur in the truths or the
// predictions; classes that never occur are left out.
struct Metrics {
  std::array<std::array<int, kNumPostures>, kNumPostures> confusion{};  // [truth][pred]
  std::array<ClassScores, kNumPostures> per_class{};
  int classes_present = 0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  double accuracy = 0.0;
  std::size_t samples = 0;

  bool present(int cls) const {
    return per_class[std::size_t(cls)].support > 0 || per_class[std::size_t(cls)].predicted > 0;
  }
};

// Throws DataError on a length mismatch or empty input.
Metrics compute_metrics(std::span<const PostureLabel> predictions,
                        std::span<const PostureLabel> truths);

nlohmann::json metrics_to_json(const Metrics& m);

struct TrialSpec {
  PipelineSpec pipeline;
  std::string name;  // free text; defaults to the pipeline name
};

struct SplitSpec {
  SplitKind kind = SplitKind::kRandomShuffle;
  double test_fraction = 0.2;
  std::vector<int> train_subjects;
  std::optional<std::vector<int>> test_subjects;
};

struct Plan {
  std::filesystem::path dataset;  // resolved against the plan file's directory
  SplitSpec split;
  std::vector<TrialSpec> trials;
  // Drives the split shuffle, reservoir wiring and readout shuffling.
  std::uint64_t seed = 42;
  RunConfig config;
};

// Keys: dataset, split {kind, test_fraction, train_subjects, test_subjects},
// trials [{pipeline, coding_number, name}], seed, config. Unknown keys throw.
Plan plan_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Plan load_plan(const std::filesystem::path& path);
nlohmann::json plan_to_json(const Plan& plan);

struct TrialResult {
  int index = 0;  // 1-based, plan order
  TrialSpec spec;
  Metrics metrics;
  std::optional<CalibrationResult> calibration;
  std::uint64_t topology_seed = 0;
  std::uint64_t train_seed = 0;
  int epochs = 0;
  double final_loss = 0.0;
  // Wall-clock figures; kept out of the report body so reports stay
  // byte-identical between runs.
  double wall_seconds = 0.0;
  double ms_per_frame = 0.0;
};

struct Report {
  Plan plan;
  Split split;
  std::vector<TrialResult> trials;
};

// `threads` parallelizes feature extraction; results do not depend on it.
Report run_experiment(std::span<const PressureFrame> frames, const Plan& plan,
                      int threads = 1);

std::string render_markdown(const Report& report);
nlohmann::json report_to_json(const Report& report);
nlohmann::json timing_to_json(const Report& report);

}  // namespace liquidstate
