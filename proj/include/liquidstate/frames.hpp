#pragma once

// Pressure-frame data model: posture labels, the 19x10 frame layout, phase
// normalization and the plain-text frame file format.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace liquidstate {

inline constexpr int kFrameRows = 19;
inline constexpr int kFrameCols = 10;
inline constexpr int kFrameCells = kFrameRows * kFrameCols;
inline constexpr int kMaxCount = 1023;  // 10-bit ADC

inline constexpr int kSeatRows = 9;
inline constexpr int kSeatCols = 9;
inline constexpr int kBackrestRows = 10;
inline constexpr int kBackrestCols = 9;

inline constexpr int kNumPostures = 15;

// One of the 15 sitting postures. Ids are dense in [0, 14].
class PostureLabel {
 public:
  constexpr PostureLabel() = default;
  // Throws DataError when id is outside [0, 14].
  explicit PostureLabel(int id);

  static std::optional<PostureLabel> from_name(std::string_view name);

  constexpr int id() const noexcept { return id_; }
  std::string_view name() const noexcept;

  friend constexpr bool operator==(PostureLabel, PostureLabel) = default;
  friend constexpr auto operator<=>(PostureLabel, PostureLabel) = default;

 private:
  int id_ = 0;
};

// Canonical posture names, indexed by id.
const std::array<std::string_view, kNumPostures>& posture_names();

// Row-major 19x10 raw counts. Rows 0-9 are the backrest (row 0 at the top),
// rows 10-18 the seat pan (row 10 next to the backrest).
using FrameValues = std::array<std::uint16_t, kFrameCells>;

struct PressureFrame {
  FrameValues values{};
  int subject_id = 1;
  PostureLabel label;

  std::uint16_t at(int row, int col) const {
    return values[static_cast<std::size_t>(row * kFrameCols + col)];
  }

  friend bool operator==(const PressureFrame&, const PressureFrame&) = default;
};

// Throws DataError if any value exceeds 1023 or subject_id < 1.
void validate(const PressureFrame& frame);

// A raw sensor sheet as read from the hardware multiplexer.
struct SensorSheet {
  int rows = 0;
  int cols = 0;
  std::vector<int> cells;  // row-major

  SensorSheet() = default;
  SensorSheet(int r, int c) : rows(r), cols(c), cells(std::size_t(r * c), 0) {}

  int& at(int r, int c) { return cells[std::size_t(r * cols + c)]; }
  int at(int r, int c) const { return cells[std::size_t(r * cols + c)]; }
};

// Stacks the 10x9 backrest over the 9x9 seat and zero-pads column 9.
FrameValues assemble_frame(const SensorSheet& seat, const SensorSheet& backrest);

// Frame cell index holding the given seat/backrest sensor.
int seat_cell_index(int row, int col);
int backrest_cell_index(int row, int col);

using PhaseFrame = std::array<double, kFrameCells>;

enum class NormalizationMode { kFixedRange, kPerFrameMinMax };

std::string_view to_string(NormalizationMode mode);
NormalizationMode normalization_mode_from_string(std::string_view s);

PhaseFrame normalize_to_phase(const PressureFrame& frame,
                              NormalizationMode mode = NormalizationMode::kFixedRange);

// Frame CSV. Header `# pressure-frames v1 p=19 q=10`, then one
// `subject_id,label_name,v0,...,v189` record per line.
std::vector<PressureFrame> read_frames(std::istream& in,
                                       const std::string& source = "<stream>");
void write_frames(std::ostream& out, const std::vector<PressureFrame>& frames);

std::vector<PressureFrame> load_frames(const std::filesystem::path& path);
void save_frames(const std::vector<PressureFrame>& frames,
                 const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;
  std::vector<int> subject_ids;
  std::map<std::string, int> class_counts;  // by posture name
  std::size_t frame_count = 0;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// JSON document describing a dataset directory.
struct DatasetManifest {
  std::vector<ManifestEntry> files;
  // Generator settings echo; null for recorded data.
  nlohmann::json generator;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

ManifestEntry describe_frames(const std::vector<PressureFrame>& frames,
                              std::string path);

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace liquidstate
