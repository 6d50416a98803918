#include "liquidstate/frames.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <set>
#include <sstream>

#include "liquidstate/error.hpp"

namespace liquidstate {
namespace {

constexpr std::array<std::string_view, kNumPostures> kPostureNames = {
    "upright",
    "leaning right",
    "leaning left",
    "leaning forward",
    "leaning back",
    "LC seated upright",
    "RC seated upright",
    "LC leaning back",
    "RC leaning back",
    "LA seated upright",
    "RA seated upright",
    "LA leaning back",
    "RA leaning back",
    "sitting on the leading edge",
    "slouching back down",
};

constexpr std::string_view kFrameHeader = "# pressure-frames v1 p=19 q=10";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

bool parse_int(std::string_view s, int& out) {
  s = trim(s);
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void check_sheet(const SensorSheet& sheet, int rows, int cols,
                 std::string_view what) {
  if (sheet.rows != rows || sheet.cols != cols ||
      sheet.cells.size() != std::size_t(rows * cols)) {
    std::ostringstream msg;
    msg << what << " sheet must be " << rows << "x" << cols << ", got "
        << sheet.rows << "x" << sheet.cols;
    throw DataError(msg.str());
  }
  for (int v : sheet.cells) {
    if (v < 0 || v > kMaxCount) {
      std::ostringstream msg;
      msg << what << " sheet value " << v << " outside [0, " << kMaxCount << "]";
      throw DataError(msg.str());
    }
  }
}

}  // namespace

PostureLabel::PostureLabel(int id) : id_(id) {
  if (id < 0 || id >= kNumPostures) {
    throw DataError("posture id " + std::to_string(id) + " outside [0, 14]");
  }
}

std::optional<PostureLabel> PostureLabel::from_name(std::string_view name) {
  for (int i = 0; i < kNumPostures; ++i) {
    if (kPostureNames[std::size_t(i)] == name) return PostureLabel(i);
  }
  return std::nullopt;
}

std::string_view PostureLabel::name() const noexcept {
  return kPostureNames[std::size_t(id_)];
}

const std::array<std::string_view, kNumPostures>& posture_names() {
  return kPostureNames;
}

void validate(const PressureFrame& frame) {
  if (frame.subject_id < 1) {
    throw DataError("subject id must be >= 1, got " +
                    std::to_string(frame.subject_id));
  }
  for (std::size_t i = 0; i < frame.values.size(); ++i) {
    if (frame.values[i] > kMaxCount) {
      throw DataError("cell " + std::to_string(i) + " value " +
                      std::to_string(frame.values[i]) + " exceeds 1023");
    }
  }
}

int seat_cell_index(int row, int col) {
  return (kBackrestRows + row) * kFrameCols + col;
}

int backrest_cell_index(int row, int col) { return row * kFrameCols + col; }

FrameValues assemble_frame(const SensorSheet& seat, const SensorSheet& backrest) {
  check_sheet(seat, kSeatRows, kSeatCols, "seat");
  check_sheet(backrest, kBackrestRows, kBackrestCols, "backrest");
  FrameValues out{};
  for (int r = 0; r < kBackrestRows; ++r) {
    for (int c = 0; c < kBackrestCols; ++c) {
      out[std::size_t(backrest_cell_index(r, c))] =
          static_cast<std::uint16_t>(backrest.at(r, c));
    }
  }
  for (int r = 0; r < kSeatRows; ++r) {
    for (int c = 0; c < kSeatCols; ++c) {
      out[std::size_t(seat_cell_index(r, c))] =
          static_cast<std::uint16_t>(seat.at(r, c));
    }
  }
  return out;
}

std::string_view to_string(NormalizationMode mode) {
  switch (mode) {
    case NormalizationMode::kFixedRange:
      return "fixed_range";
    case NormalizationMode::kPerFrameMinMax:
      return "per_frame_minmax";
  }
  return "fixed_range";
}

NormalizationMode normalization_mode_from_string(std::string_view s) {
  if (s == "fixed_range") return NormalizationMode::kFixedRange;
  if (s == "per_frame_minmax") return NormalizationMode::kPerFrameMinMax;
  throw DataError("unknown normalization mode '" + std::string(s) + "'");
}

PhaseFrame normalize_to_phase(const PressureFrame& frame, NormalizationMode mode) {
  PhaseFrame phases{};
  if (mode == NormalizationMode::kFixedRange) {
    for (std::size_t i = 0; i < phases.size(); ++i) {
      phases[i] = double(frame.values[i]) / double(kMaxCount) * std::numbers::pi;
    }
    return phases;
  }
  const auto [lo_it, hi_it] =
      std::minmax_element(frame.values.begin(), frame.values.end());
  const double lo = *lo_it;
  const double span = double(*hi_it) - lo;
  if (span <= 0.0) return phases;  // constant frame
  for (std::size_t i = 0; i < phases.size(); ++i) {
    phases[i] = (double(frame.values[i]) - lo) / span * std::numbers::pi;
  }
  return phases;
}

std::vector<PressureFrame> read_frames(std::istream& in, const std::string& source) {
  std::vector<PressureFrame> frames;
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = trim(line);
    if (!saw_header) {
      if (view != kFrameHeader) {
        throw ParseError(source, line_no,
                         "expected header '" + std::string(kFrameHeader) + "'");
      }
      saw_header = true;
      continue;
    }
    if (view.empty()) continue;

    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = view.find(',', start);
      fields.push_back(view.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (fields.size() != std::size_t(2 + kFrameCells)) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(2 + kFrameCells) +
                           " fields, got " + std::to_string(fields.size()));
    }
    PressureFrame frame;
    if (!parse_int(fields[0], frame.subject_id) || frame.subject_id < 1) {
      throw ParseError(source, line_no,
                       "bad subject id '" + std::string(fields[0]) + "'");
    }
    const auto label = PostureLabel::from_name(trim(fields[1]));
    if (!label) {
      throw ParseError(source, line_no,
                       "unknown posture '" + std::string(trim(fields[1])) + "'");
    }
    frame.label = *label;
    for (int i = 0; i < kFrameCells; ++i) {
      int v = 0;
      const auto field = fields[std::size_t(2 + i)];
      if (!parse_int(field, v)) {
        throw ParseError(source, line_no,
                         "bad value '" + std::string(field) + "' in column v" +
                             std::to_string(i));
      }
      if (v < 0 || v > kMaxCount) {
        throw ParseError(source, line_no,
                         "value " + std::to_string(v) + " in column v" +
                             std::to_string(i) + " outside [0, 1023]");
      }
      frame.values[std::size_t(i)] = static_cast<std::uint16_t>(v);
    }
    frames.push_back(frame);
  }
  if (!saw_header) throw ParseError(source, 1, "missing header");
  return frames;
}

void write_frames(std::ostream& out, const std::vector<PressureFrame>& frames) {
  out << kFrameHeader << '\n';
  for (const auto& frame : frames) {
    validate(frame);
    out << frame.subject_id << ',' << frame.label.name();
    for (auto v : frame.values) out << ',' << v;
    out << '\n';
  }
}

std::vector<PressureFrame> load_frames(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open frame file " + path.string());
  return read_frames(in, path.string());
}

void save_frames(const std::vector<PressureFrame>& frames,
                 const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write frame file " + path.string());
  write_frames(out, frames);
  if (!out) throw DataError("write failed for " + path.string());
}

ManifestEntry describe_frames(const std::vector<PressureFrame>& frames,
                              std::string path) {
  ManifestEntry entry;
  entry.path = std::move(path);
  entry.frame_count = frames.size();
  std::set<int> subjects;
  for (const auto& f : frames) {
    subjects.insert(f.subject_id);
    ++entry.class_counts[std::string(f.label.name())];
  }
  entry.subject_ids.assign(subjects.begin(), subjects.end());
  return entry;
}

void save_manifest(const DatasetManifest& manifest,
                   const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["format"] = "pressure-frames-manifest";
  doc["version"] = 1;
  doc["files"] = nlohmann::json::array();
  for (const auto& e : manifest.files) {
    doc["files"].push_back({{"path", e.path},
                            {"frame_count", e.frame_count},
                            {"subject_ids", e.subject_ids},
                            {"class_counts", e.class_counts}});
  }
  doc["generator"] = manifest.generator;
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << doc.dump(2) << '\n';
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open manifest " + path.string());
  DatasetManifest manifest;
  try {
    const auto doc = nlohmann::json::parse(in);
    if (doc.value("format", "") != "pressure-frames-manifest" ||
        doc.value("version", 0) != 1) {
      throw DataError(path.string() + ": not a v1 pressure-frames manifest");
    }
    for (const auto& f : doc.at("files")) {
      ManifestEntry e;
      e.path = f.at("path").get<std::string>();
      e.frame_count = f.at("frame_count").get<std::size_t>();
      e.subject_ids = f.at("subject_ids").get<std::vector<int>>();
      e.class_counts = f.at("class_counts").get<std::map<std::string, int>>();
      manifest.files.push_back(std::move(e));
    }
    manifest.generator = doc.value("generator", nlohmann::json());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return manifest;
}

}  // namespace liquidstate
