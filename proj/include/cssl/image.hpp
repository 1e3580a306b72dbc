#pragma once

// In-memory image representation shared by loaders, transforms and the
// network input path: row-major H x W x C, interleaved channels, float.
// Ingested images hold intensities in [0,1]; normalized patches are
// unbounded.

#include <cstddef>
#include <vector>

namespace cssl {

struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(int h, int w, int c)
      : height(h), width(w), channels(c),
        pixels(static_cast<std::size_t>(h) * w * c, 0.0f) {}

  float& at(int r, int c, int k) {
    return pixels[(static_cast<std::size_t>(r) * width + c) * channels + k];
  }
  const float& at(int r, int c, int k) const {
    return pixels[(static_cast<std::size_t>(r) * width + c) * channels + k];
  }
  std::size_t size() const { return pixels.size(); }
};

// Grid-cell-tagged crop; data range is unbounded once normalized.
struct Patch {
  Image data;
  int cell_row = 0;
  int cell_col = 0;
};

// rectangular crop at (r0, c0); caller guarantees bounds
Image crop(const Image& img, int r0, int c0, int h, int w);

// centered crop to out_h x out_w (offsets rounded down)
Image center_crop(const Image& img, int out_h, int out_w);

// bilinear resampling with pixel-center alignment; same-size input is
// returned unchanged (exact identity)
Image resize_bilinear(const Image& img, int out_h, int out_w);

} // namespace cssl
