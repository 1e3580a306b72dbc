#pragma once

// Difficulty-ordered staged pretraining. A schedule is a list of jitter
// levels sorted by ascending difficulty f (default f = 1 - retention); the
// curriculum trains one persistent model through the levels, regenerating
// samples lazily per epoch, and records per-epoch metrics.

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cssl/training.hpp"
#include "cssl/transforms.hpp"

namespace cssl::curriculum {

struct CurriculumSchedule {
  std::vector<transforms::JitterLevel> levels; // ascending difficulty
};

using DifficultyFn = std::function<double(const transforms::JitterLevel&)>;

// f(level) = 1 - retention; strictly decreasing in retention
double default_difficulty(const transforms::JitterLevel& level);

// Sorts levels by ascending f; equal f-values violate the schedule's
// distinctness invariant and raise an error.
CurriculumSchedule order_by_difficulty(std::vector<transforms::JitterLevel> levels,
                                       const DifficultyFn& f);

// Retentions start, start-step, ... down to the last value >= end, with end
// appended when the walk does not land on it (1e-9 tolerance).
CurriculumSchedule build_schedule(double start_retention, double end_retention,
                                  double step);

// Train and eval providers realized for one level.
struct LevelData {
  std::unique_ptr<train::SampleProvider> train_data;
  std::unique_ptr<train::SampleProvider> eval_data;
};
using LevelDataFn = std::function<LevelData(const transforms::JitterLevel&)>;

// One persistent model and optimizer trained through every level in order;
// epochs are numbered globally so a single-level schedule is bit-identical to
// the plain trainer. Trainer failures carry the level index.
std::vector<train::RunRecord> run_curriculum(
    model::ModelState& state, const LevelDataFn& data_for,
    const CurriculumSchedule& schedule, const train::TrainerConfig& cfg,
    int epochs_per_level, const std::string& run_id, std::uint64_t seed);

// Argmax of downstream accuracy; ties go to the lowest difficulty id.
int select_best_difficulty(
    const std::vector<std::pair<int, double>>& candidates);

} // namespace cssl::curriculum
