#pragma once

// Cosine-rank latency code: every sensor cell becomes `coding_number` input
// neurons, each of which fires at most once within an `amplitude`-bin window.

#include <cstdint>
#include <optional>
#include <vector>

#include "liquidstate/frames.hpp"

namespace liquidstate {

struct EncodingConfig {
  int amplitude = 30;     // time bins per window, 1 ms each
  int coding_number = 2;  // phase-shifted channels per cell

  void validate() const;  // amplitude >= 2, coding_number >= 1

  int input_width(int cells = kFrameCells) const { return cells * coding_number; }
  friend bool operator==(const EncodingConfig&, const EncodingConfig&) = default;
};

// Binary (neurons x bins) matrix with at most one spike per row. Stored as a
// spike bin per row, so the one-spike invariant holds by construction.
class EncodedSpikes {
 public:
  static constexpr std::int16_t kNoSpike = -1;

  EncodedSpikes() = default;
  EncodedSpikes(int rows, int bins);

  int rows() const noexcept { return static_cast<int>(bins_of_row_.size()); }
  int bins() const noexcept { return bins_; }

  // Bin in [0, bins) or kNoSpike.
  int spike_bin(int row) const { return bins_of_row_[std::size_t(row)]; }
  void set_spike(int row, int bin);

  bool at(int row, int bin) const { return spike_bin(row) == bin; }
  int spike_count() const;

  // Row-major 0/1 matrix, rows() * bins() entries.
  std::vector<std::uint8_t> dense() const;

  friend bool operator==(const EncodedSpikes&, const EncodedSpikes&) = default;

 private:
  int bins_ = 0;
  std::vector<std::int16_t> bins_of_row_;
};

// y = A/2 * (cos(phase + pi*channel/n) + 1), clipped to [0, A-1] and
// truncated. Returns nullopt when the clipped y is exactly 0 (a small
// positive y still spikes, in bin 0). Throws DataError for a phase
// outside [0, pi] or a channel outside [0, n).
std::optional<int> spike_time(double phase, int channel, const EncodingConfig& cfg);

// Row (cell * n + channel), column = spike bin.
EncodedSpikes encode(const PhaseFrame& frame, const EncodingConfig& cfg);

// Fallback used when a raw frame is fed to spiking neurons directly: every
// cell with a non-zero count spikes once in bin 0.
EncodedSpikes binarize_raw(const PressureFrame& frame, int bins);

}  // namespace liquidstate
