#include "liquidstate/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "liquidstate/error.hpp"

namespace liquidstate {

void EncodingConfig::validate() const {
  if (amplitude < 2) {
    throw DataError("encoding amplitude must be >= 2, got " +
                    std::to_string(amplitude));
  }
  if (amplitude > 32767) throw DataError("encoding amplitude too large");
  if (coding_number < 1) {
    throw DataError("coding number must be >= 1, got " +
                    std::to_string(coding_number));
  }
}

EncodedSpikes::EncodedSpikes(int rows, int bins)
    : bins_(bins), bins_of_row_(std::size_t(std::max(rows, 0)), kNoSpike) {
  if (rows < 0 || bins < 1 || bins > 32767) {
    throw DataError("invalid spike matrix shape " + std::to_string(rows) + "x" +
                    std::to_string(bins));
  }
}

void EncodedSpikes::set_spike(int row, int bin) {
  if (row < 0 || row >= rows() || bin < 0 || bin >= bins_) {
    throw DataError("spike (" + std::to_string(row) + ", " + std::to_string(bin) +
                    ") outside the matrix");
  }
  bins_of_row_[std::size_t(row)] = static_cast<std::int16_t>(bin);
}

int EncodedSpikes::spike_count() const {
  return static_cast<int>(std::count_if(bins_of_row_.begin(), bins_of_row_.end(),
                                        [](std::int16_t b) { return b >= 0; }));
}

std::vector<std::uint8_t> EncodedSpikes::dense() const {
  std::vector<std::uint8_t> out(std::size_t(rows()) * std::size_t(bins_), 0);
  for (int r = 0; r < rows(); ++r) {
    const int b = spike_bin(r);
    if (b >= 0) out[std::size_t(r) * std::size_t(bins_) + std::size_t(b)] = 1;
  }
  return out;
}

std::optional<int> spike_time(double phase, int channel, const EncodingConfig& cfg) {
  if (!(phase >= 0.0 && phase <= std::numbers::pi)) {
    throw DataError("phase " + std::to_string(phase) + " outside [0, pi]");
  }
  if (channel < 0 || channel >= cfg.coding_number) {
    throw DataError("channel " + std::to_string(channel) + " outside [0, " +
                    std::to_string(cfg.coding_number) + ")");
  }
  const double a = cfg.amplitude;
  const double shift = std::numbers::pi * channel / cfg.coding_number;
  double y = 0.5 * a * (std::cos(phase + shift) + 1.0);
  y = std::clamp(y, 0.0, a - 1.0);
  if (y == 0.0) return std::nullopt;
  return static_cast<int>(y);  // truncation toward zero
}

EncodedSpikes encode(const PhaseFrame& frame, const EncodingConfig& cfg) {
  cfg.validate();
  const int n = cfg.coding_number;
  EncodedSpikes spikes(kFrameCells * n, cfg.amplitude);
  for (int cell = 0; cell < kFrameCells; ++cell) {
    for (int ch = 0; ch < n; ++ch) {
      if (const auto bin = spike_time(frame[std::size_t(cell)], ch, cfg)) {
        spikes.set_spike(cell * n + ch, *bin);
      }
    }
  }
  return spikes;
}

EncodedSpikes binarize_raw(const PressureFrame& frame, int bins) {
  EncodedSpikes spikes(kFrameCells, bins);
  for (int cell = 0; cell < kFrameCells; ++cell) {
    if (frame.values[std::size_t(cell)] > 0) spikes.set_spike(cell, 0);
  }
  return spikes;
}

}  // namespace liquidstate
