#include "cssl/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace cssl {

Image crop(const Image& img, int r0, int c0, int h, int w) {
  if (r0 < 0 || c0 < 0 || r0 + h > img.height || c0 + w > img.width)
    throw std::out_of_range("crop rectangle outside image");
  Image out(h, w, img.channels);
  const std::size_t row_bytes =
      static_cast<std::size_t>(w) * img.channels * sizeof(float);
  for (int r = 0; r < h; ++r)
    std::memcpy(&out.at(r, 0, 0), &img.at(r0 + r, c0, 0), row_bytes);
  return out;
}

Image center_crop(const Image& img, int out_h, int out_w) {
  return crop(img, (img.height - out_h) / 2, (img.width - out_w) / 2, out_h,
              out_w);
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize target must be positive");
  if (out_h == img.height && out_w == img.width) return img;

  Image out(out_h, out_w, img.channels);
  const double sy = static_cast<double>(img.height) / out_h;
  const double sx = static_cast<double>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const float wy = static_cast<float>(fy - y0);
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const float wx = static_cast<float>(fx - x0);
      for (int k = 0; k < img.channels; ++k) {
        const float top =
            (1.0f - wx) * img.at(y0, x0, k) + wx * img.at(y0, x1, k);
        const float bot =
            (1.0f - wx) * img.at(y1, x0, k) + wx * img.at(y1, x1, k);
        out.at(y, x, k) = (1.0f - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

} // namespace cssl
