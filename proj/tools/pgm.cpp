#include "pgm.hpp"

#include <fstream>

#include "liquidstate/error.hpp"

namespace liquidstate::tools {
namespace {

GreyImage blocks(int rows, int cols, int scale, auto&& level) {
  if (scale < 1) throw DataError("image scale must be >= 1");
  GreyImage img;
  img.width = cols * scale;
  img.height = rows * scale;
  img.pixels.resize(std::size_t(img.width) * std::size_t(img.height));
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      img.pixels[std::size_t(y) * std::size_t(img.width) + std::size_t(x)] =
          level(y / scale, x / scale);
    }
  }
  return img;
}

}  // namespace

GreyImage frame_heatmap(const PressureFrame& frame, int scale) {
  return blocks(kFrameRows, kFrameCols, scale, [&](int r, int c) {
    return std::uint8_t((frame.at(r, c) * 255 + kMaxCount / 2) / kMaxCount);
  });
}

GreyImage spike_image(const EncodedSpikes& spikes, int scale) {
  return blocks(spikes.rows(), spikes.bins(), scale,
                [&](int r, int t) { return std::uint8_t(spikes.at(r, t) ? 255 : 0); });
}

GreyImage raster_image(const SpikeRaster& raster, int scale) {
  return blocks(raster.neurons, raster.steps, scale,
                [&](int n, int t) { return std::uint8_t(raster.at(n, t) ? 255 : 0); });
}

void write_pgm(const GreyImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            std::streamsize(image.pixels.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

}  // namespace liquidstate::tools
