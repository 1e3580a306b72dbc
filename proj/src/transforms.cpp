#include "cssl/transforms.hpp"

#include <cmath>
#include <stdexcept>

#include "cssl/kernels.hpp"

namespace cssl::transforms {

std::vector<Patch> extract_patches(const Image& image, int grid_n) {
  if (grid_n < 2) throw std::invalid_argument("grid_n must be >= 2");
  if (grid_n > image.height || grid_n > image.width)
    throw std::invalid_argument("grid_n larger than image");

  const int ph = image.height / grid_n;
  const int pw = image.width / grid_n;
  const Image base = center_crop(image, ph * grid_n, pw * grid_n);

  std::vector<Patch> patches;
  patches.reserve(static_cast<std::size_t>(grid_n) * grid_n);
  for (int r = 0; r < grid_n; ++r)
    for (int c = 0; c < grid_n; ++c)
      patches.push_back({crop(base, r * ph, c * pw, ph, pw), r, c});
  return patches;
}

Image reassemble_patches(const std::vector<Patch>& patches, int grid_n) {
  if (patches.size() != static_cast<std::size_t>(grid_n) * grid_n)
    throw std::invalid_argument("patch count does not match grid");
  const Image& p0 = patches.front().data;
  Image out(p0.height * grid_n, p0.width * grid_n, p0.channels);
  for (int r = 0; r < grid_n; ++r)
    for (int c = 0; c < grid_n; ++c) {
      const Image& p = patches[static_cast<std::size_t>(r) * grid_n + c].data;
      for (int y = 0; y < p.height; ++y)
        for (int x = 0; x < p.width; ++x)
          for (int k = 0; k < p.channels; ++k)
            out.at(r * p.height + y, c * p.width + x, k) = p.at(y, x, k);
    }
  return out;
}

Patch jitter_patch(const Patch& patch, JitterLevel level, int input_size,
                   RngStream& rng) {
  if (level.retention <= 0.0 || level.retention > 1.0)
    throw std::invalid_argument("retention must be in (0, 1]");
  // epsilon keeps exact decimal products (e.g. 0.87 * 100) from flooring low
  const int ch = static_cast<int>(
      std::floor(level.retention * patch.data.height + 1e-9));
  const int cw = static_cast<int>(
      std::floor(level.retention * patch.data.width + 1e-9));
  if (ch < 1 || cw < 1) throw std::invalid_argument("jitter crop collapsed to zero");

  const int r0 = rng.uniform_int(0, patch.data.height - ch);
  const int c0 = rng.uniform_int(0, patch.data.width - cw);
  return {resize_bilinear(crop(patch.data, r0, c0, ch, cw), input_size,
                          input_size),
          patch.cell_row, patch.cell_col};
}

Patch normalize_patch(const Patch& patch) {
  if (patch.data.pixels.empty()) throw std::invalid_argument("empty patch");
  double mean = 0.0, var = 0.0;
  kernels::moments(patch.data.pixels.data(), patch.data.size(), &mean, &var);
  const double scale = 1.0 / (std::sqrt(var) + 1e-8);
  Patch out{Image(patch.data.height, patch.data.width, patch.data.channels),
            patch.cell_row, patch.cell_col};
  kernels::scale_shift(patch.data.pixels.data(), out.data.pixels.data(),
                       patch.data.size(), static_cast<float>(scale),
                       static_cast<float>(-mean * scale));
  return out;
}

Image random_greyscale(const Image& image, double p, RngStream& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("probability out of range");
  const bool apply = rng.bernoulli(p);
  if (!apply || image.channels == 1) return image;
  Image out(image.height, image.width, image.channels);
  const float inv = 1.0f / static_cast<float>(image.channels);
  for (int r = 0; r < image.height; ++r)
    for (int c = 0; c < image.width; ++c) {
      float s = 0.0f;
      for (int k = 0; k < image.channels; ++k) s += image.at(r, c, k);
      const float g = s * inv;
      for (int k = 0; k < image.channels; ++k) out.at(r, c, k) = g;
    }
  return out;
}

} // namespace cssl::transforms
