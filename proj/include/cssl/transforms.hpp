#pragma once

// Patch extraction and the shortcut-suppressing transforms: random-crop
// jitter, per-patch normalization, random greyscaling. All randomness comes
// from an explicit RngStream; draw counts per operation are fixed (see each
// function) so streams replay exactly.

#include <vector>

#include "cssl/image.hpp"
#include "cssl/rng.hpp"

namespace cssl::transforms {

// Fraction of patch side kept by the jitter crop; 1.0 = no jitter.
struct JitterLevel {
  double retention = 1.0;
};

struct TransformConfig {
  JitterLevel jitter;
  double greyscale_p = 0.0;
  bool normalize = true;
  int input_size = 32; // network input side; jittered patches are resized to it
};

// Splits into grid_n x grid_n equal patches, row-major, after center-cropping
// to the largest grid-divisible size. Reassembling the patches in row-major
// order reproduces the cropped image bit-exactly.
std::vector<Patch> extract_patches(const Image& image, int grid_n);

// inverse of extract_patches for patches in row-major source order
Image reassemble_patches(const std::vector<Patch>& patches, int grid_n);

// Crops floor(retention * side) per dimension at a random offset, then
// resizes to input_size. Always consumes exactly 2 draws (row, col offsets).
Patch jitter_patch(const Patch& patch, JitterLevel level, int input_size,
                   RngStream& rng);

// Zero mean, unit std over all pixels and channels jointly; constant patches
// map to zeros (epsilon 1e-8 in the divisor). No rng draws.
Patch normalize_patch(const Patch& patch);

// With probability p replaces each pixel by its equal-weight channel mean.
// Always consumes exactly 1 draw (the coin).
Image random_greyscale(const Image& image, double p, RngStream& rng);

} // namespace cssl::transforms
