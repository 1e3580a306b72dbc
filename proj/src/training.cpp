#include "cssl/training.hpp"

#include <chrono>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "cssl/rng.hpp"

namespace cssl::train {
namespace {

// substream tag for the epoch shuffle; sample substreams use dataset indices,
// which can never collide with this
constexpr std::uint64_t kShuffleStream = 0xFFFFFFFFFFFFFFFFull;

void check_compatible(const model::ModelState& state,
                      const SampleProvider& data) {
  if (data.size() < 1) throw std::invalid_argument("empty dataset");
  const int k = data.patches_per_sample();
  if (k != state.head_spec().n_patches)
    throw std::invalid_argument("provider patch count does not match the head");
  if (data.n_classes() != state.head_spec().n_classes)
    throw std::invalid_argument("provider classes do not match the head");
}

// Realizes samples[first..first+count) of `order`, packs their patches in
// sample-major patch-minor fold order and validates labels. Throws before the
// caller can apply any update.
struct Batch {
  nn::Slab<float> slab;
  std::vector<int> labels;
};

Batch form_batch(const model::ModelState& state, const SampleProvider& data,
                 int epoch, const std::vector<int>& order, int first,
                 int count) {
  const auto& espec = state.encoder_spec();
  const int k = data.patches_per_sample();
  std::vector<tasks::PretextSample> samples;
  samples.reserve(count);
  for (int i = 0; i < count; ++i)
    samples.push_back(data.make(epoch, order[first + i]));
  Batch b;
  b.labels.reserve(count);
  for (const auto& s : samples) {
    if (static_cast<int>(s.patches.size()) != k)
      throw std::runtime_error("provider returned a wrong patch count");
    if (s.label < 0 || s.label >= data.n_classes())
      throw std::runtime_error("sample label out of range");
    b.labels.push_back(s.label);
  }
  std::vector<const Image*> imgs;
  imgs.reserve(static_cast<std::size_t>(count) * k);
  for (const auto& s : samples)
    for (const auto& p : s.patches) imgs.push_back(&p.data);
  // packed at the samples' own side: the fully convolutional encoder does
  // not care, so downstream images may be larger than pretext patches
  b.slab = model::pack_slab(imgs, espec.channels, imgs.front()->height);
  return b;
}

} // namespace

double evaluate_accuracy(model::ModelState& state, const SampleProvider& data,
                         int batch_size, int epoch) {
  check_compatible(state, data);
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  const int classes = data.n_classes();
  std::vector<float> emb, logits;
  long long correct = 0;
  for (int first = 0; first < data.size(); first += batch_size) {
    const int count = std::min(batch_size, data.size() - first);
    auto batch = form_batch(state, data, epoch, order, first, count);
    state.encoder().forward(batch.slab, emb);
    state.head().forward(emb.data(), count, logits);
    for (int i = 0; i < count; ++i)
      correct += nn::argmax_row(
                     logits.data() + static_cast<std::size_t>(i) * classes,
                     classes) == batch.labels[i];
  }
  return static_cast<double>(correct) / data.size();
}

std::vector<EpochResult> train(model::ModelState& state,
                               const SampleProvider& train_data,
                               const SampleProvider& eval_data,
                               const TrainerConfig& cfg, int epochs,
                               std::uint64_t shuffle_seed, int first_epoch,
                               AdamState* adam) {
  check_compatible(state, train_data);
  check_compatible(state, eval_data);
  if (cfg.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");

  const nn::AdamConfig acfg{cfg.lr, cfg.beta1, cfg.beta2, cfg.eps};
  AdamState local;
  AdamState& step = adam ? *adam : local;
  auto params = state.params();
  // the last two tensors are the head weight and bias
  if (cfg.head_only) params.erase(params.begin(), params.end() - 2);
  const int n = train_data.size();
  const int classes = train_data.n_classes();

  std::vector<EpochResult> results;
  std::vector<float> emb, logits, dlogits, demb;
  for (int e = first_epoch; e < first_epoch + epochs; ++e) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    RngStream shuf(shuffle_seed, static_cast<std::uint64_t>(e), kShuffleStream);
    shuf.shuffle(order);

    long long correct = 0;
    double loss_sum = 0.0;
    for (int first = 0; first < n; first += cfg.batch_size) {
      const int count = std::min(cfg.batch_size, n - first);
      auto batch = form_batch(state, train_data, e, order, first, count);
      state.encoder().forward(batch.slab, emb);
      state.head().forward(emb.data(), count, logits);
      for (int i = 0; i < count; ++i)
        correct += nn::argmax_row(
                       logits.data() + static_cast<std::size_t>(i) * classes,
                       classes) == batch.labels[i];
      const double loss =
          nn::softmax_xent<float>(logits, batch.labels, count, classes, &dlogits);
      loss_sum += loss * count;
      state.head().backward(emb.data(), dlogits.data(), count,
                            cfg.head_only ? nullptr : &demb);
      if (!cfg.head_only) state.encoder().backward(batch.slab, demb);
      ++step.t;
      for (auto* p : params) p->adam_update(acfg, step.t);
    }

    EpochResult r;
    r.epoch = e;
    r.loss = loss_sum / n;
    r.train_acc = static_cast<double>(correct) / n;
    r.test_acc = evaluate_accuracy(state, eval_data, cfg.batch_size);
    r.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    results.push_back(r);
  }
  return results;
}

void append_metrics(const std::string& path, const RunRecord& rec) {
  nlohmann::json j{{"run_id", rec.run_id},
                   {"seed", rec.seed},
                   {"level_retention", rec.level_retention},
                   {"epoch", rec.epoch},
                   {"pretext_train_acc", rec.pretext_train_acc},
                   {"pretext_test_acc", rec.pretext_test_acc},
                   {"wall_time_s", rec.wall_time_s}};
  std::ofstream f(path, std::ios::app);
  if (!f) throw std::runtime_error("cannot open metrics file: " + path);
  f << j.dump() << '\n';
  if (!f) throw std::runtime_error("metrics write failed: " + path);
}

std::vector<RunRecord> read_metrics(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open metrics file: " + path);
  std::vector<RunRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " +
                               e.what());
    }
    RunRecord r;
    r.run_id = j.at("run_id").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.level_retention = j.at("level_retention").get<double>();
    r.epoch = j.at("epoch").get<int>();
    r.pretext_train_acc = j.at("pretext_train_acc").get<double>();
    r.pretext_test_acc = j.at("pretext_test_acc").get<double>();
    r.wall_time_s = j.at("wall_time_s").get<double>();
    out.push_back(std::move(r));
  }
  return out;
}

} // namespace cssl::train
