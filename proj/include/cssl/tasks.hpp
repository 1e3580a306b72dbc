#pragma once

// Pretext-task sample assembly. Pipeline order is fixed: greyscale coin,
// label draw, per-patch jitter in source row-major order, per-patch
// normalization, then (jigsaw) reordering by the drawn permutation.
// Draw counts per sample are pinned: 1 coin + 1 label draw + 2 per jittered
// patch; changing them breaks run reproducibility.

#include <vector>

#include "cssl/image.hpp"
#include "cssl/permutations.hpp"
#include "cssl/rng.hpp"
#include "cssl/transforms.hpp"

namespace cssl::tasks {

enum class TaskKind { jigsaw, patch_pair };

struct PretextSample {
  std::vector<Patch> patches;
  int label = 0;
  TaskKind kind = TaskKind::jigsaw;
};

// Shuffled patch tuple labeled by permutation index: output position i holds
// source patch perm.order[i]. Grid side is sqrt(perm_set.n_patches).
PretextSample make_jigsaw_sample(const Image& image,
                                 const perms::PermutationSet& perm_set,
                                 const transforms::TransformConfig& cfg,
                                 RngStream& rng);

// 3x3 grid; patches[0] is a uniformly drawn non-center patch, patches[1] the
// center. Label is the neighbor's index under row-major enumeration of the 8
// non-center cells (top-left 0 .. bottom-right 7). Only the two used patches
// are jittered, neighbor first.
PretextSample make_patch_pair_sample(const Image& image,
                                     const transforms::TransformConfig& cfg,
                                     RngStream& rng);

// label space size: |perm_set| for jigsaw, 8 for patch-pair
int label_space_size(TaskKind kind, const perms::PermutationSet& perm_set);

} // namespace cssl::tasks
