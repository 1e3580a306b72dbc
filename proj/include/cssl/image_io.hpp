#pragma once

// PNG/JPEG decoding and PNG encoding between files and float images in
// [0, 1]. Format is detected from magic bytes, not the file name.

#include <string>

#include "cssl/image.hpp"

namespace cssl::io {

// 1- or 3-channel result; 16-bit, palette and alpha inputs are folded to
// 8-bit grey/RGB. Throws on unreadable or unsupported files.
Image read_image(const std::string& path);

// 8-bit grey or RGB PNG; values are clamped to [0, 1] on the way out.
void write_png(const Image& img, const std::string& path);

} // namespace cssl::io
