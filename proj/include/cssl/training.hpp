#pragma once

// Minibatch trainer for pretext and downstream heads. Sample realization is
// delegated to a SampleProvider so datasets can regenerate stochastically per
// epoch (seeded substream per (epoch, dataset index)); the trainer itself is
// bit-deterministic given the provider, config and shuffle seed.

#include <cstdint>
#include <string>
#include <vector>

#include "cssl/model.hpp"
#include "cssl/tasks.hpp"

namespace cssl::train {

struct TrainerConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int batch_size = 64;
  bool head_only = false; // linear probe: freeze the encoder, train the head
};

// Optimizer step counter shared across train() calls so multi-phase schedules
// keep Adam's bias correction continuous.
struct AdamState {
  long long t = 0;
};

class SampleProvider {
 public:
  virtual ~SampleProvider() = default;
  virtual int size() const = 0;
  virtual int n_classes() const = 0;
  virtual int patches_per_sample() const = 0;
  // index is the stable dataset index, not the shuffled position
  virtual tasks::PretextSample make(int epoch, int index) const = 0;
};

struct EpochResult {
  int epoch = 0;
  double loss = 0.0;
  double train_acc = 0.0; // predictions taken before each batch's update
  double test_acc = 0.0;
  double wall_time_s = 0.0; // excluded from determinism comparisons
};

// Forward-only accuracy; parameters are left untouched.
double evaluate_accuracy(model::ModelState& state, const SampleProvider& data,
                         int batch_size, int epoch = 0);

// Runs `epochs` passes numbered from first_epoch. Labels are validated before
// the batch they belong to is applied. A null adam uses a local step counter.
std::vector<EpochResult> train(model::ModelState& state,
                               const SampleProvider& train_data,
                               const SampleProvider& eval_data,
                               const TrainerConfig& cfg, int epochs,
                               std::uint64_t shuffle_seed, int first_epoch = 0,
                               AdamState* adam = nullptr);

struct RunRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  double level_retention = 1.0;
  int epoch = 0;
  double pretext_train_acc = 0.0;
  double pretext_test_acc = 0.0;
  double wall_time_s = 0.0;
};

// One JSON object per line, appended.
void append_metrics(const std::string& path, const RunRecord& rec);
std::vector<RunRecord> read_metrics(const std::string& path);

} // namespace cssl::train
