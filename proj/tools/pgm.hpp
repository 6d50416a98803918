#pragma once

// Binary greyscale PGM (P5) output for frame heatmaps and spike rasters.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "liquidstate/encoder.hpp"
#include "liquidstate/frames.hpp"
#include "liquidstate/reservoir.hpp"

namespace liquidstate::tools {

struct GreyImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 0 = black
};

// Each cell becomes a `scale` x `scale` block; 0 counts black, 1023 white.
GreyImage frame_heatmap(const PressureFrame& frame, int scale);

// Rows are input channels (or neurons), columns are time bins; a spike is a
// white `scale` x `scale` block.
GreyImage spike_image(const EncodedSpikes& spikes, int scale);
GreyImage raster_image(const SpikeRaster& raster, int scale);

void write_pgm(const GreyImage& image, const std::filesystem::path& path);

}  // namespace liquidstate::tools
