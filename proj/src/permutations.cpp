#include "cssl/permutations.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cssl/rng.hpp"

namespace cssl::perms {
namespace {

constexpr int kEnumerationLimit = 5;  // enumerate S_n fully up to here
constexpr int kPoolSize = 10000;

unsigned long long factorial(int n) {
  unsigned long long f = 1;
  for (int i = 2; i <= n; ++i) f *= static_cast<unsigned>(i);
  return f;
}

Permutation identity(int n) {
  Permutation p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

// lex-sorted distinct candidates
std::vector<Permutation> candidate_pool(int n, RngStream& rng) {
  std::vector<Permutation> pool;
  if (n <= kEnumerationLimit) {
    Permutation p = identity(n);
    do {
      pool.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  } else {
    pool.reserve(kPoolSize);
    for (int i = 0; i < kPoolSize; ++i) {
      Permutation p = identity(n);
      rng.shuffle(p);
      pool.push_back(std::move(p));
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  }
  return pool;
}

} // namespace

int hamming_distance(const Permutation& p, const Permutation& q) {
  if (p.size() != q.size())
    throw std::invalid_argument("permutation length mismatch");
  int d = 0;
  for (std::size_t i = 0; i < p.size(); ++i) d += p[i] != q[i];
  return d;
}

int min_pairwise_distance(const std::vector<Permutation>& perms) {
  if (perms.size() < 2) return 0;
  int best = static_cast<int>(perms.front().size());
  for (std::size_t i = 0; i < perms.size(); ++i)
    for (std::size_t j = i + 1; j < perms.size(); ++j)
      best = std::min(best, hamming_distance(perms[i], perms[j]));
  return best;
}

PermutationSet generate_permutation_set(int n_patches, int set_size,
                                        std::uint64_t seed) {
  if (n_patches < 2) throw std::invalid_argument("n_patches must be >= 2");
  if (set_size < 1) throw std::invalid_argument("set_size must be >= 1");
  if (n_patches <= 20 &&
      static_cast<unsigned long long>(set_size) > factorial(n_patches))
    throw std::invalid_argument("set_size exceeds n_patches!");

  RngStream rng(seed);
  Permutation start = identity(n_patches);
  rng.shuffle(start);

  const std::vector<Permutation> pool = candidate_pool(n_patches, rng);

  PermutationSet set;
  set.n_patches = n_patches;
  set.perms.push_back(start);

  // min distance from each candidate to the selected set, updated per pick;
  // 0 marks duplicates of selected permutations
  std::vector<int> mind(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    mind[i] = hamming_distance(pool[i], start);

  while (set.size() < set_size) {
    int best = -1;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (mind[i] > best) { // strictly greater keeps the lex-smallest tie
        best = mind[i];
        best_i = i;
      }
    }
    if (best <= 0)
      throw std::runtime_error("candidate pool exhausted before set_size");
    set.perms.push_back(pool[best_i]);
    for (std::size_t i = 0; i < pool.size(); ++i)
      mind[i] = std::min(mind[i], hamming_distance(pool[i], pool[best_i]));
  }

  set.min_pairwise_distance = min_pairwise_distance(set.perms);
  return set;
}

void save_set(const PermutationSet& set, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << set.n_patches << ' ' << set.size() << '\n';
  for (const auto& p : set.perms) {
    for (std::size_t i = 0; i < p.size(); ++i)
      out << p[i] << (i + 1 < p.size() ? ' ' : '\n');
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

PermutationSet load_set(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);

  auto fail = [&](int line, const std::string& what) {
    throw std::runtime_error(path + ":" + std::to_string(line) + ": " + what);
  };

  std::string line;
  if (!std::getline(in, line)) fail(1, "empty file");
  std::istringstream header(line);
  int n_patches = 0, set_size = 0;
  if (!(header >> n_patches >> set_size) || n_patches < 2 || set_size < 1)
    fail(1, "malformed header, expected 'n_patches set_size'");

  PermutationSet set;
  set.n_patches = n_patches;
  for (int i = 0; i < set_size; ++i) {
    if (!std::getline(in, line)) fail(i + 2, "unexpected end of file");
    std::istringstream row(line);
    Permutation p(n_patches);
    for (int j = 0; j < n_patches; ++j)
      if (!(row >> p[j])) fail(i + 2, "expected " + std::to_string(n_patches) +
                                          " indices");
    int trailing = 0;
    if (row >> trailing) fail(i + 2, "too many indices");

    std::vector<bool> seen(n_patches, false);
    for (int v : p) {
      if (v < 0 || v >= n_patches || seen[v])
        fail(i + 2, "not a permutation of 0.." + std::to_string(n_patches - 1));
      seen[v] = true;
    }
    if (std::find(set.perms.begin(), set.perms.end(), p) != set.perms.end())
      fail(i + 2, "duplicate permutation");
    set.perms.push_back(std::move(p));
  }
  set.min_pairwise_distance = min_pairwise_distance(set.perms);
  return set;
}

} // namespace cssl::perms
