#include "cssl/tasks.hpp"

#include <cmath>
#include <stdexcept>

namespace cssl::tasks {
namespace {

int grid_side(int n_patches) {
  const int side = static_cast<int>(std::lround(std::sqrt(n_patches)));
  if (side < 2 || side * side != n_patches)
    throw std::invalid_argument("n_patches must be a square grid size");
  return side;
}

} // namespace

PretextSample make_jigsaw_sample(const Image& image,
                                 const perms::PermutationSet& perm_set,
                                 const transforms::TransformConfig& cfg,
                                 RngStream& rng) {
  if (perm_set.perms.empty()) throw std::invalid_argument("empty permutation set");
  const int grid = grid_side(perm_set.n_patches);

  const Image base = transforms::random_greyscale(image, cfg.greyscale_p, rng);
  const int label = static_cast<int>(rng.index(perm_set.perms.size()));

  std::vector<Patch> source = transforms::extract_patches(base, grid);
  for (auto& p : source) {
    p = transforms::jitter_patch(p, cfg.jitter, cfg.input_size, rng);
    if (cfg.normalize) p = transforms::normalize_patch(p);
  }

  const perms::Permutation& order = perm_set.perms[label];
  PretextSample sample;
  sample.kind = TaskKind::jigsaw;
  sample.label = label;
  sample.patches.reserve(source.size());
  for (int i = 0; i < perm_set.n_patches; ++i)
    sample.patches.push_back(std::move(source[order[i]]));
  return sample;
}

PretextSample make_patch_pair_sample(const Image& image,
                                     const transforms::TransformConfig& cfg,
                                     RngStream& rng) {
  const Image base = transforms::random_greyscale(image, cfg.greyscale_p, rng);
  const int label = static_cast<int>(rng.index(8));

  const std::vector<Patch> grid = transforms::extract_patches(base, 3);
  const int neighbor_cell = label < 4 ? label : label + 1; // skip center (1,1)

  auto prep = [&](const Patch& p) {
    Patch out = transforms::jitter_patch(p, cfg.jitter, cfg.input_size, rng);
    return cfg.normalize ? transforms::normalize_patch(out) : out;
  };

  PretextSample sample;
  sample.kind = TaskKind::patch_pair;
  sample.label = label;
  sample.patches.push_back(prep(grid[neighbor_cell]));
  sample.patches.push_back(prep(grid[4]));
  return sample;
}

int label_space_size(TaskKind kind, const perms::PermutationSet& perm_set) {
  return kind == TaskKind::jigsaw ? perm_set.size() : 8;
}

} // namespace cssl::tasks
