#include "cssl/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cssl::curriculum {

namespace {
constexpr double kTol = 1e-9;
}

double default_difficulty(const transforms::JitterLevel& level) {
  return 1.0 - level.retention;
}

CurriculumSchedule order_by_difficulty(std::vector<transforms::JitterLevel> levels,
                                       const DifficultyFn& f) {
  if (levels.empty()) throw std::invalid_argument("schedule needs levels");
  std::stable_sort(levels.begin(), levels.end(),
                   [&](const auto& a, const auto& b) { return f(a) < f(b); });
  for (std::size_t i = 1; i < levels.size(); ++i)
    if (!(f(levels[i - 1]) < f(levels[i])))
      throw std::invalid_argument("difficulty values must be distinct");
  return {std::move(levels)};
}

CurriculumSchedule build_schedule(double start_retention, double end_retention,
                                  double step) {
  if (!(end_retention > 0.0) || !(start_retention <= 1.0) ||
      !(end_retention <= start_retention))
    throw std::invalid_argument(
        "retention bounds must satisfy 0 < end <= start <= 1");
  if (!(step > 0.0) || !(step < 1.0))
    throw std::invalid_argument("step must be in (0, 1)");

  CurriculumSchedule out;
  // i * step instead of repeated subtraction keeps the walk free of
  // accumulated rounding drift
  for (int i = 0;; ++i) {
    const double r = start_retention - i * step;
    if (!(r > end_retention + kTol)) break;
    out.levels.push_back({r});
  }
  if (out.levels.empty() ||
      std::abs(out.levels.back().retention - end_retention) > kTol)
    out.levels.push_back({end_retention});
  return out;
}

std::vector<train::RunRecord> run_curriculum(
    model::ModelState& state, const LevelDataFn& data_for,
    const CurriculumSchedule& schedule, const train::TrainerConfig& cfg,
    int epochs_per_level, const std::string& run_id, std::uint64_t seed) {
  if (schedule.levels.empty())
    throw std::invalid_argument("schedule must have at least one level");
  if (epochs_per_level < 1)
    throw std::invalid_argument("epochs_per_level must be >= 1");

  std::vector<train::RunRecord> records;
  train::AdamState adam;
  int epoch = 0;
  for (std::size_t li = 0; li < schedule.levels.size(); ++li) {
    const auto& level = schedule.levels[li];
    try {
      auto data = data_for(level);
      if (!data.train_data || !data.eval_data)
        throw std::invalid_argument("level data providers missing");
      auto epochs = train::train(state, *data.train_data, *data.eval_data, cfg,
                                 epochs_per_level, seed, epoch, &adam);
      for (const auto& e : epochs) {
        train::RunRecord rec;
        rec.run_id = run_id;
        rec.seed = seed;
        rec.level_retention = level.retention;
        rec.epoch = e.epoch;
        rec.pretext_train_acc = e.train_acc;
        rec.pretext_test_acc = e.test_acc;
        rec.wall_time_s = e.wall_time_s;
        records.push_back(std::move(rec));
      }
      epoch += epochs_per_level;
    } catch (const std::exception& e) {
      throw std::runtime_error("curriculum level " + std::to_string(li) + ": " +
                               e.what());
    }
  }
  return records;
}

int select_best_difficulty(
    const std::vector<std::pair<int, double>>& candidates) {
  if (candidates.empty())
    throw std::invalid_argument("select_best_difficulty needs candidates");
  for (const auto& [id, acc] : candidates)
    if (!(acc >= 0.0 && acc <= 1.0))
      throw std::invalid_argument("accuracy out of [0, 1]");
  int best_id = candidates.front().first;
  double best_acc = candidates.front().second;
  for (const auto& [id, acc] : candidates)
    if (acc > best_acc || (acc == best_acc && id < best_id)) {
      best_id = id;
      best_acc = acc;
    }
  return best_id;
}

} // namespace cssl::curriculum
