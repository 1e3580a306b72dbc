#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cssl/permutations.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "cssl/rng.hpp"

using namespace cssl::perms;

namespace {

// Independent oracle implementations: recursive S_n enumeration and a
// from-scratch greedy max-min recomputation. Deliberately shares no code
// with the library.

void build_perms(std::vector<int>& cur, std::vector<bool>& used, int n,
                 std::vector<Permutation>& out) {
  if (static_cast<int>(cur.size()) == n) {
    out.push_back(cur);
    return;
  }
  for (int v = 0; v < n; ++v) {
    if (used[v]) continue;
    used[v] = true;
    cur.push_back(v);
    build_perms(cur, used, n, out);
    cur.pop_back();
    used[v] = false;
  }
}

std::vector<Permutation> oracle_all_perms(int n) {
  std::vector<Permutation> out;
  std::vector<int> cur;
  std::vector<bool> used(n, false);
  build_perms(cur, used, n, out);
  std::sort(out.begin(), out.end());
  return out;
}

int oracle_distance(const Permutation& a, const Permutation& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a[i] != b[i]) ++d;
  return d;
}

int oracle_min_dist(const std::vector<Permutation>& set) {
  int best = static_cast<int>(set.front().size()) + 1;
  for (std::size_t i = 0; i < set.size(); ++i)
    for (std::size_t j = i + 1; j < set.size(); ++j)
      best = std::min(best, oracle_distance(set[i], set[j]));
  return best;
}

// greedy max-min over all of S_n from a given start, lex tie-break
std::vector<Permutation> oracle_greedy(const Permutation& start, int size) {
  const auto pool = oracle_all_perms(static_cast<int>(start.size()));
  std::vector<Permutation> chosen{start};
  while (static_cast<int>(chosen.size()) < size) {
    int best_d = -1;
    Permutation best;
    for (const auto& cand : pool) {
      int d = static_cast<int>(start.size()) + 1;
      for (const auto& c : chosen) d = std::min(d, oracle_distance(cand, c));
      if (d > best_d) {
        best_d = d;
        best = cand;
      }
    }
    REQUIRE(best_d > 0);
    chosen.push_back(best);
  }
  return chosen;
}

std::string temp_path(const char* name) {
  return std::string("/tmp/") + name;
}

} // namespace

TEST_CASE("hamming_distance basics") {
  CHECK(hamming_distance({0, 1, 2, 3}, {0, 1, 2, 3}) == 0);
  CHECK(hamming_distance({0, 1, 2, 3}, {1, 0, 3, 2}) == 4);
  CHECK(hamming_distance({0, 1, 2, 3}, {1, 0, 2, 3}) == 2);
  CHECK_THROWS(hamming_distance({0, 1, 2}, {0, 1, 2, 3}));
}

TEST_CASE("hamming_distance symmetry, zero iff equal, never one") {
  const auto pool = oracle_all_perms(4);
  for (const auto& p : pool)
    for (const auto& q : pool) {
      const int d = hamming_distance(p, q);
      CHECK(d == hamming_distance(q, p));
      CHECK((d == 0) == (p == q));
      CHECK(d != 1);
    }
}

TEST_CASE("generate_permutation_set is deterministic") {
  const auto a = generate_permutation_set(4, 12, 7);
  const auto b = generate_permutation_set(4, 12, 7);
  CHECK(a == b);
  const auto c = generate_permutation_set(4, 12, 8);
  CHECK(a.perms != c.perms);
}

TEST_CASE("set_size 24 exhausts S4 at distance 2") {
  const auto set = generate_permutation_set(4, 24, 3);
  CHECK(set.size() == 24);
  std::set<Permutation> uniq(set.perms.begin(), set.perms.end());
  CHECK(uniq.size() == 24);
  CHECK(set.min_pairwise_distance == 2);
  CHECK(oracle_min_dist(set.perms) == 2);
}

TEST_CASE("set_size 2 always attains distance 4") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto set = generate_permutation_set(4, 2, seed);
    CHECK(set.min_pairwise_distance == 4);
  }
}

TEST_CASE("greedy output matches the exhaustive oracle for every size") {
  for (std::uint64_t seed : {1ULL, 5ULL, 11ULL}) {
    for (int size = 2; size <= 24; ++size) {
      const auto set = generate_permutation_set(4, size, seed);
      const auto want = oracle_greedy(set.perms.front(), size);
      CHECK(set.perms == want);
      CHECK(set.min_pairwise_distance == oracle_min_dist(want));
    }
  }
}

TEST_CASE("even permutations certify distance 3 at size 12") {
  const auto pool = oracle_all_perms(4);
  std::vector<Permutation> even;
  for (const auto& p : pool) {
    int inversions = 0;
    for (std::size_t i = 0; i < p.size(); ++i)
      for (std::size_t j = i + 1; j < p.size(); ++j)
        inversions += p[i] > p[j];
    if (inversions % 2 == 0) even.push_back(p);
  }
  REQUIRE(even.size() == 12);
  CHECK(oracle_min_dist(even) == 3);
}

TEST_CASE("greedy beats random subsets at size 12") {
  const auto greedy = generate_permutation_set(4, 12, 5);
  const auto pool = oracle_all_perms(4);
  cssl::RngStream rng(99);
  int wins = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    auto shuffled = pool;
    rng.shuffle(shuffled);
    shuffled.resize(12);
    if (greedy.min_pairwise_distance >= oracle_min_dist(shuffled)) ++wins;
  }
  CHECK(wins >= 95);
}

TEST_CASE("large-n path uses the sampled pool deterministically") {
  const auto a = generate_permutation_set(9, 12, 42);
  const auto b = generate_permutation_set(9, 12, 42);
  CHECK(a == b);
  CHECK(a.size() == 12);
  std::set<Permutation> uniq(a.perms.begin(), a.perms.end());
  CHECK(uniq.size() == 12);
  CHECK(a.min_pairwise_distance >= 2);
  for (const auto& p : a.perms) {
    auto sorted = p;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < 9; ++i) CHECK(sorted[i] == i);
  }
}

TEST_CASE("generation rejects invalid sizes") {
  CHECK_THROWS(generate_permutation_set(1, 1, 0));
  CHECK_THROWS(generate_permutation_set(4, 25, 0));
  CHECK_THROWS(generate_permutation_set(4, 0, 0));
  CHECK_NOTHROW(generate_permutation_set(4, 24, 0));
}

TEST_CASE("save and load round trip") {
  const auto set = generate_permutation_set(4, 12, 7);
  const auto path = temp_path("perm_roundtrip.txt");
  save_set(set, path);
  const auto loaded = load_set(path);
  CHECK(loaded == set);
  std::remove(path.c_str());
}

TEST_CASE("load_set rejects malformed files") {
  const auto path = temp_path("perm_bad.txt");
  auto write = [&](const char* text) {
    std::ofstream out(path);
    out << text;
  };

  write("");
  CHECK_THROWS_WITH_AS(load_set(path), doctest::Contains(":1:"),
                       std::runtime_error);
  write("not a header\n");
  CHECK_THROWS(load_set(path));
  write("4 2\n0 1 2 3\n");
  CHECK_THROWS_WITH_AS(load_set(path), doctest::Contains(":3:"),
                       std::runtime_error);
  write("4 2\n0 1 2 3\n0 1 2 2\n");
  CHECK_THROWS_WITH_AS(load_set(path), doctest::Contains("not a permutation"),
                       std::runtime_error);
  write("4 2\n0 1 2 3\n0 1 2 3\n");
  CHECK_THROWS_WITH_AS(load_set(path), doctest::Contains("duplicate"),
                       std::runtime_error);
  write("4 1\n0 1 2 3 4\n");
  CHECK_THROWS_WITH_AS(load_set(path), doctest::Contains("too many"),
                       std::runtime_error);
  std::remove(path.c_str());
}
