#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "cssl/model.hpp"
#include "cssl/rng.hpp"
#include "cssl/training.hpp"

using cssl::Image;
using cssl::RngStream;
namespace model = cssl::model;
namespace train = cssl::train;
namespace tasks = cssl::tasks;

namespace {

model::EncoderSpec tiny_spec() {
  model::EncoderSpec spec;
  spec.input_size = 8;
  spec.channels = 3;
  spec.stages = {{4, 3, 2}, {6, 3, 2}};
  spec.embedding_dim = 6;
  return spec;
}

// Two classes of constant-signal patches (+1 / -1) with fresh per-epoch noise
// drawn from the (seed, epoch, index) substream.
class ToyProvider : public train::SampleProvider {
 public:
  ToyProvider(int n, int k, std::uint64_t seed, double noise = 0.1)
      : n_(n), k_(k), seed_(seed), noise_(noise) {}

  int size() const override { return n_; }
  int n_classes() const override { return 2; }
  int patches_per_sample() const override { return k_; }

  tasks::PretextSample make(int epoch, int index) const override {
    RngStream rng(seed_, static_cast<std::uint64_t>(epoch),
                  static_cast<std::uint64_t>(index));
    tasks::PretextSample s;
    s.label = index % 2;
    const float base = s.label == 0 ? -1.0f : 1.0f;
    for (int j = 0; j < k_; ++j) {
      cssl::Patch p;
      p.data = Image(8, 8, 3);
      for (auto& v : p.data.pixels)
        v = base + static_cast<float>(rng.normal(0.0, noise_));
      s.patches.push_back(std::move(p));
    }
    return s;
  }

 private:
  int n_, k_;
  std::uint64_t seed_;
  double noise_;
};

class BadLabelProvider : public ToyProvider {
 public:
  using ToyProvider::ToyProvider;
  tasks::PretextSample make(int epoch, int index) const override {
    auto s = ToyProvider::make(epoch, index);
    s.label = 99;
    return s;
  }
};

std::vector<float> snapshot(model::ModelState& m) {
  std::vector<float> out;
  for (auto* p : m.params()) out.insert(out.end(), p->w.begin(), p->w.end());
  return out;
}

train::TrainerConfig fast_cfg() {
  train::TrainerConfig cfg;
  cfg.lr = 0.01;
  cfg.batch_size = 16;
  return cfg;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/cssl_" + name) {
    std::remove(path.c_str());
  }
  ~TempFile() { std::remove(path.c_str()); }
};

} // namespace

TEST_CASE("trainer separates an easy two-class problem") {
  for (int k : {1, 2}) {
    CAPTURE(k);
    model::ModelState m(tiny_spec(), {k, 2}, 21);
    ToyProvider train_data(64, k, 500), eval_data(32, k, 501);
    auto res = train::train(m, train_data, eval_data, fast_cfg(), 12, 7);
    REQUIRE(res.size() == 12);
    CHECK(res.front().epoch == 0);
    CHECK(res.back().epoch == 11);
    CHECK(res.back().loss < res.front().loss);
    CHECK(res.back().train_acc == 1.0);
    CHECK(res.back().test_acc == 1.0);
    for (const auto& r : res) CHECK(r.wall_time_s >= 0.0);
  }
}

TEST_CASE("training is bit-deterministic given seed, config and provider") {
  auto run = [] {
    model::ModelState m(tiny_spec(), {1, 2}, 3);
    ToyProvider train_data(48, 1, 9), eval_data(16, 1, 10);
    auto res = train::train(m, train_data, eval_data, fast_cfg(), 3, 11);
    return std::make_pair(snapshot(m), res);
  };
  auto [w1, r1] = run();
  auto [w2, r2] = run();
  CHECK(std::memcmp(w1.data(), w2.data(), w1.size() * sizeof(float)) == 0);
  REQUIRE(r1.size() == r2.size());
  for (std::size_t i = 0; i < r1.size(); ++i) {
    CHECK(r1[i].loss == r2[i].loss);
    CHECK(r1[i].train_acc == r2[i].train_acc);
    CHECK(r1[i].test_acc == r2[i].test_acc);
  }
}

TEST_CASE("adam state carries across calls: 2 epochs equals 1+1") {
  ToyProvider train_data(48, 1, 9), eval_data(16, 1, 10);
  model::ModelState a(tiny_spec(), {1, 2}, 3);
  auto ra = train::train(a, train_data, eval_data, fast_cfg(), 2, 11);

  model::ModelState b(tiny_spec(), {1, 2}, 3);
  train::AdamState adam;
  auto rb1 = train::train(b, train_data, eval_data, fast_cfg(), 1, 11, 0, &adam);
  auto rb2 = train::train(b, train_data, eval_data, fast_cfg(), 1, 11, 1, &adam);

  auto wa = snapshot(a), wb = snapshot(b);
  CHECK(std::memcmp(wa.data(), wb.data(), wa.size() * sizeof(float)) == 0);
  CHECK(ra[0].loss == rb1[0].loss);
  CHECK(ra[1].loss == rb2[0].loss);
  CHECK(ra[1].epoch == rb2[0].epoch);
}

TEST_CASE("head_only training freezes the encoder and still fits the head") {
  model::ModelState m(tiny_spec(), {1, 2}, 21);
  ToyProvider train_data(64, 1, 500), eval_data(32, 1, 501);
  auto params = m.params();
  const std::size_t head_floats =
      params[params.size() - 2]->w.size() + params.back()->w.size();
  auto before = snapshot(m);
  auto cfg = fast_cfg();
  cfg.head_only = true;
  auto res = train::train(m, train_data, eval_data, cfg, 12, 7);
  auto after = snapshot(m);
  const std::size_t enc_floats = before.size() - head_floats;
  CHECK(std::memcmp(before.data(), after.data(),
                    enc_floats * sizeof(float)) == 0);
  CHECK(std::memcmp(before.data() + enc_floats, after.data() + enc_floats,
                    head_floats * sizeof(float)) != 0);
  CHECK(res.back().test_acc == 1.0);
}

TEST_CASE("invalid labels abort the epoch before any update") {
  model::ModelState m(tiny_spec(), {1, 2}, 5);
  BadLabelProvider bad(32, 1, 9);
  ToyProvider eval_data(16, 1, 10);
  auto before = snapshot(m);
  CHECK_THROWS_WITH_AS(train::train(m, bad, eval_data, fast_cfg(), 1, 1),
                       doctest::Contains("label out of range"),
                       std::runtime_error);
  auto after = snapshot(m);
  CHECK(std::memcmp(before.data(), after.data(),
                    before.size() * sizeof(float)) == 0);
}

TEST_CASE("evaluate_accuracy leaves parameters untouched") {
  model::ModelState m(tiny_spec(), {1, 2}, 5);
  ToyProvider data(32, 1, 9);
  auto before = snapshot(m);
  const double acc1 = train::evaluate_accuracy(m, data, 10);
  const double acc2 = train::evaluate_accuracy(m, data, 32);
  auto after = snapshot(m);
  CHECK(std::memcmp(before.data(), after.data(),
                    before.size() * sizeof(float)) == 0);
  CHECK(acc1 == acc2); // batching must not change results
}

TEST_CASE("provider and head shape mismatches are rejected") {
  model::ModelState m(tiny_spec(), {2, 2}, 5);
  ToyProvider one_patch(16, 1, 9), two_patch(16, 2, 9);
  CHECK_THROWS(train::train(m, one_patch, two_patch, fast_cfg(), 1, 1));
  CHECK_THROWS(train::evaluate_accuracy(m, one_patch, 8));
  CHECK_NOTHROW(train::evaluate_accuracy(m, two_patch, 8));
}

TEST_CASE("metrics jsonl round trips and reports malformed lines") {
  TempFile f("metrics.jsonl");
  train::RunRecord a{"runA", 7, 0.9, 3, 0.75, 0.7, 1.25};
  train::RunRecord b{"runB", 8, 0.85, 0, 0.5, 0.45, 0.5};
  train::append_metrics(f.path, a);
  train::append_metrics(f.path, b);
  auto recs = train::read_metrics(f.path);
  REQUIRE(recs.size() == 2);
  CHECK(recs[0].run_id == "runA");
  CHECK(recs[0].seed == 7);
  CHECK(recs[0].level_retention == 0.9);
  CHECK(recs[0].epoch == 3);
  CHECK(recs[0].pretext_train_acc == 0.75);
  CHECK(recs[0].pretext_test_acc == 0.7);
  CHECK(recs[0].wall_time_s == 1.25);
  CHECK(recs[1].run_id == "runB");

  {
    std::FILE* fp = std::fopen(f.path.c_str(), "a");
    std::fputs("not json\n", fp);
    std::fclose(fp);
  }
  CHECK_THROWS_WITH_AS(train::read_metrics(f.path), doctest::Contains(":3:"),
                       std::runtime_error);
  CHECK_THROWS(train::read_metrics("/tmp/cssl_missing_metrics.jsonl"));
}
