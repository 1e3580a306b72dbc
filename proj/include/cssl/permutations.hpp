#pragma once

// Label space of the jigsaw task: sets of permutations chosen greedily for
// high pairwise Hamming distance. The index of a permutation in the set is
// its class label and is stable once persisted.

#include <cstdint>
#include <string>
#include <vector>

namespace cssl::perms {

// bijection on {0..n-1}
using Permutation = std::vector<int>;

struct PermutationSet {
  std::vector<Permutation> perms;
  int n_patches = 0;
  int min_pairwise_distance = 0;

  int size() const { return static_cast<int>(perms.size()); }
  bool operator==(const PermutationSet&) const = default;
};

// positions where p and q disagree; throws on length mismatch
int hamming_distance(const Permutation& p, const Permutation& q);

// Greedy max-min construction: seeded random start, then repeatedly the
// candidate maximizing the minimum distance to the chosen set, lexicographic
// tie-break. Candidates are all of S_n for n <= 5, else a seeded pool of
// 10,000 draws.
PermutationSet generate_permutation_set(int n_patches, int set_size,
                                        std::uint64_t seed);

// recompute the cached minimum pairwise distance
int min_pairwise_distance(const std::vector<Permutation>& perms);

// Text format: header "n_patches set_size", then one permutation per line,
// space-separated indices.
void save_set(const PermutationSet& set, const std::string& path);
PermutationSet load_set(const std::string& path);

} // namespace cssl::perms
