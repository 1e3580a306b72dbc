// Command-line front end: permutation-set generation, pretext pretraining
// (fixed jitter or curriculum), downstream transfer evaluation, and cross-run
// comparison artifacts. One command is one process; multi-seed loops are
// sequential unless --parallel is given, with one self-contained directory
// per run (config.resolved, checkpoint.bin, metrics.jsonl, plots/).

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cssl/curriculum.hpp"
#include "cssl/data.hpp"
#include "cssl/evaluation.hpp"
#include "cssl/image.hpp"
#include "cssl/model.hpp"
#include "cssl/permutations.hpp"
#include "cssl/tasks.hpp"
#include "cssl/training.hpp"
#include "cssl/transforms.hpp"

namespace fs = std::filesystem;
using cssl::Image;
namespace curriculum = cssl::curriculum;
namespace data = cssl::data;
namespace eval = cssl::eval;
namespace model = cssl::model;
namespace perms = cssl::perms;
namespace tasks = cssl::tasks;
namespace train = cssl::train;
namespace transforms = cssl::transforms;

namespace {

struct DataOpts {
  std::string source = "synthetic";
  std::string dir;
  int images = 2000; // synthetic unlabeled pool size
  int train_images = 500;
  int test_images = 800;
  int image_size = 64;
  std::uint64_t data_seed = 0;
};

void add_data_options(CLI::App& cmd, DataOpts& d) {
  cmd.add_option("--data", d.source, "dataset source")
      ->check(CLI::IsMember({"synthetic", "stl10", "folder"}))
      ->capture_default_str();
  cmd.add_option("--data-dir", d.dir, "dataset directory (stl10, folder)");
  cmd.add_option("--images", d.images, "synthetic unlabeled image count")
      ->capture_default_str();
  cmd.add_option("--train-images", d.train_images,
                 "synthetic labeled train split size")
      ->capture_default_str();
  cmd.add_option("--test-images", d.test_images,
                 "synthetic labeled test split size")
      ->capture_default_str();
  cmd.add_option("--image-size", d.image_size, "image side in pixels")
      ->capture_default_str();
  cmd.add_option("--data-seed", d.data_seed, "synthetic generator seed")
      ->capture_default_str();
}

void require_dir_for_source(const DataOpts& d) {
  if (d.source != "synthetic" && d.dir.empty())
    throw std::invalid_argument("--data-dir is required for --data " + d.source);
}

data::SyntheticSpec synthetic_spec(const DataOpts& d) {
  data::SyntheticSpec spec;
  spec.n_images = d.images;
  spec.n_labeled_train = d.train_images;
  spec.n_labeled_test = d.test_images;
  spec.image_size = d.image_size;
  spec.seed = d.data_seed;
  return spec;
}

std::shared_ptr<const std::vector<Image>> load_unlabeled(const DataOpts& d) {
  if (d.source == "synthetic") {
    auto ds = data::generate_synthetic(synthetic_spec(d));
    return std::make_shared<std::vector<Image>>(std::move(ds.unlabeled.images));
  }
  auto split = d.source == "stl10"
                   ? data::load_stl10_binary(d.dir, data::SplitKind::unlabeled)
                   : data::load_image_folder(d.dir, d.image_size);
  return std::make_shared<std::vector<Image>>(std::move(split.images));
}

std::pair<std::shared_ptr<const data::DatasetSplit>,
          std::shared_ptr<const data::DatasetSplit>>
load_labeled(const DataOpts& d) {
  data::DatasetSplit tr, te;
  if (d.source == "synthetic") {
    auto ds = data::generate_synthetic(synthetic_spec(d));
    tr = std::move(ds.labeled_train);
    te = std::move(ds.labeled_test);
  } else if (d.source == "stl10") {
    tr = data::load_stl10_binary(d.dir, data::SplitKind::labeled_train);
    te = data::load_stl10_binary(d.dir, data::SplitKind::labeled_test);
  } else {
    tr = data::load_image_folder(d.dir + "/train", d.image_size);
    te = data::load_image_folder(d.dir + "/test", d.image_size);
    te.kind = data::SplitKind::labeled_test;
  }
  return {std::make_shared<data::DatasetSplit>(std::move(tr)),
          std::make_shared<data::DatasetSplit>(std::move(te))};
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

// Per-seed worker loop, sequential by default, one thread per seed with
// --parallel (runs share only read-only data). The first failure is rethrown.
void for_each_seed(const std::vector<std::uint64_t>& seeds, bool parallel,
                   const std::function<void(std::uint64_t)>& body) {
  if (seeds.empty()) throw std::invalid_argument("--seeds must not be empty");
  if (!parallel) {
    for (auto s : seeds) body(s);
    return;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(seeds.size());
  for (std::size_t i = 0; i < seeds.size(); ++i)
    threads.emplace_back([&, i] {
      try {
        body(seeds[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---- gen-perms ----

struct GenPermsOpts {
  int n_patches = 4;
  int set_size = 12;
  std::uint64_t seed = 7;
  std::string out;
};

void run_gen_perms(const GenPermsOpts& o) {
  const auto set = perms::generate_permutation_set(o.n_patches, o.set_size, o.seed);
  perms::save_set(set, o.out);
  std::printf("wrote %d permutations of %d patches to %s\n", set.size(),
              set.n_patches, o.out.c_str());
  std::printf("min pairwise distance %d\n", set.min_pairwise_distance);
}

// ---- pretrain ----

struct PretrainOpts {
  std::string task = "jigsaw";
  std::string mode;
  double retention = 0.95;
  double schedule_start = 1.0;
  double schedule_end = 0.80;
  double schedule_step = 0.05;
  int grid = 2;
  int set_size = 12;
  std::string perm_file;
  std::uint64_t perm_seed = 7;
  int input_size = 32;
  double greyscale = 0.3;
  bool raw_pixels = false;
  int epochs = 10;
  int epochs_per_level = 2;
  double lr = 3e-3;
  int batch_size = 32;
  std::vector<std::uint64_t> seeds{0};
  std::string out;
  bool parallel = false;
  DataOpts data;
};

std::string retention_tag(double retention) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "fixed-%.2f", retention);
  return buf;
}

void run_pretrain(const PretrainOpts& o, const std::string& resolved) {
  require_dir_for_source(o.data);
  const auto kind = o.task == "jigsaw" ? tasks::TaskKind::jigsaw
                                       : tasks::TaskKind::patch_pair;

  std::shared_ptr<const perms::PermutationSet> pset;
  if (kind == tasks::TaskKind::jigsaw) {
    const int n_patches = o.grid * o.grid;
    if (!o.perm_file.empty()) {
      auto loaded = perms::load_set(o.perm_file);
      if (loaded.n_patches != n_patches)
        throw std::invalid_argument("permutation file is for " +
                                    std::to_string(loaded.n_patches) +
                                    " patches, --grid implies " +
                                    std::to_string(n_patches));
      pset = std::make_shared<perms::PermutationSet>(std::move(loaded));
    } else {
      pset = std::make_shared<perms::PermutationSet>(
          perms::generate_permutation_set(n_patches, o.set_size, o.perm_seed));
    }
  }

  const auto schedule =
      o.mode == "fixed"
          ? curriculum::CurriculumSchedule{{{o.retention}}}
          : curriculum::build_schedule(o.schedule_start, o.schedule_end,
                                       o.schedule_step);
  const int epochs_per_level = o.mode == "fixed" ? o.epochs : o.epochs_per_level;
  const std::string tag =
      o.mode == "fixed" ? retention_tag(o.retention) : "curriculum";

  const auto images = load_unlabeled(o.data);

  model::EncoderSpec espec;
  espec.input_size = o.input_size;
  const model::HeadSpec hspec{
      kind == tasks::TaskKind::jigsaw ? o.grid * o.grid : 2,
      tasks::label_space_size(kind, pset ? *pset : perms::PermutationSet{})};

  train::TrainerConfig cfg;
  cfg.lr = o.lr;
  cfg.batch_size = o.batch_size;

  for_each_seed(o.seeds, o.parallel, [&](std::uint64_t seed) {
    const fs::path run_dir = fs::path(o.out) / ("seed-" + std::to_string(seed));
    fs::create_directories(run_dir / "plots");
    write_text(run_dir / "config.resolved", resolved);

    auto provider_at = [&](double retention, bool frozen) {
      transforms::TransformConfig tc;
      tc.jitter.retention = retention;
      tc.greyscale_p = o.greyscale;
      tc.normalize = !o.raw_pixels;
      tc.input_size = o.input_size;
      return std::make_unique<data::PretextProvider>(
          images, kind, pset, tc, seed + (frozen ? 1 : 0), frozen);
    };
    auto level_data = [&](const transforms::JitterLevel& level) {
      curriculum::LevelData ld;
      ld.train_data = provider_at(level.retention, false);
      ld.eval_data = provider_at(level.retention, true);
      return ld;
    };

    model::ModelState state(espec, hspec, seed);
    const std::string run_id = tag + "-s" + std::to_string(seed);
    const auto records = curriculum::run_curriculum(
        state, level_data, schedule, cfg, epochs_per_level, run_id, seed);

    model::save_checkpoint(state, (run_dir / "checkpoint.bin").string());
    const fs::path metrics = run_dir / "metrics.jsonl";
    fs::remove(metrics);
    for (const auto& r : records) train::append_metrics(metrics.string(), r);

    eval::Curve train_curve{"TRAIN", {}}, test_curve{"TEST", {}};
    for (const auto& r : records) {
      train_curve.points.emplace_back(r.epoch, r.pretext_train_acc);
      test_curve.points.emplace_back(r.epoch, r.pretext_test_acc);
    }
    eval::write_line_chart({train_curve, test_curve}, "PRETEXT ACCURACY",
                           (run_dir / "plots" / "pretext_accuracy.png").string());
    std::printf("%s: final pretext test acc %.4f\n", run_id.c_str(),
                records.back().pretext_test_acc);
  });
}

// ---- transfer-eval ----

struct TransferOpts {
  std::string checkpoint;
  bool scratch = false;
  std::string condition;
  bool linear_probe = false;
  int epochs = 3;
  double lr = 3e-3;
  int batch_size = 32;
  std::vector<std::uint64_t> seeds{0};
  std::string out;
  bool parallel = false;
  DataOpts data;
};

void run_transfer_eval(const TransferOpts& o, const std::string& resolved) {
  if (o.scratch == !o.checkpoint.empty())
    throw std::invalid_argument("exactly one of --checkpoint or --scratch");
  require_dir_for_source(o.data);

  auto [train_split, test_split] = load_labeled(o.data);
  const int n_classes = train_split->class_count;
  data::DownstreamProvider train_data(train_split, o.data.image_size, true);
  data::DownstreamProvider test_data(test_split, o.data.image_size, true);

  std::unique_ptr<model::ModelState> pretext;
  if (!o.scratch)
    pretext = std::make_unique<model::ModelState>(
        model::load_checkpoint(o.checkpoint));

  const std::string condition =
      !o.condition.empty() ? o.condition : (o.scratch ? "scratch" : "pretrained");

  train::TrainerConfig cfg;
  cfg.lr = o.lr;
  cfg.batch_size = o.batch_size;
  cfg.head_only = o.linear_probe;

  std::vector<double> final_accs(o.seeds.size());
  for_each_seed(o.seeds, o.parallel, [&](std::uint64_t seed) {
    auto state = o.scratch
                     ? model::ModelState(model::EncoderSpec{},
                                         model::HeadSpec{1, n_classes}, seed)
                     : model::transfer_encoder(*pretext, n_classes, seed);
    train::AdamState adam;
    const auto results =
        train::train(state, train_data, test_data, cfg, o.epochs, seed, 0, &adam);
    const auto at = std::find(o.seeds.begin(), o.seeds.end(), seed);
    final_accs[at - o.seeds.begin()] = results.back().test_acc;
    std::printf("%s-s%llu: downstream test acc %.4f\n", condition.c_str(),
                static_cast<unsigned long long>(seed), results.back().test_acc);
  });

  fs::create_directories(o.out);
  write_text(fs::path(o.out) / "config.resolved", resolved);
  nlohmann::json summary;
  summary["condition"] = condition;
  summary["seeds"] = o.seeds;
  summary["final_accs"] = final_accs;
  write_text(fs::path(o.out) / "summary.json", summary.dump(2) + "\n");
}

// ---- compare ----

struct CompareOpts {
  std::string runs;
  std::string out;
};

void run_compare(const CompareOpts& o) {
  if (!fs::is_directory(o.runs))
    throw std::runtime_error("--runs is not a directory: " + o.runs);

  std::vector<fs::path> summaries;
  for (const auto& entry : fs::directory_iterator(o.runs)) {
    const auto candidate = entry.path() / "summary.json";
    if (entry.is_directory() && fs::exists(candidate))
      summaries.push_back(candidate);
  }
  std::sort(summaries.begin(), summaries.end());
  if (summaries.empty())
    throw std::runtime_error("no run summaries under " + o.runs);

  std::vector<eval::RunSummary> rows;
  std::vector<eval::Curve> by_seed;
  for (const auto& path : summaries) {
    std::ifstream in(path);
    const auto j = nlohmann::json::parse(in, nullptr, true);
    const std::string condition = j.at("condition");
    const auto& accs = j.at("final_accs");
    const auto& seeds = j.at("seeds");
    if (accs.size() != seeds.size())
      throw std::runtime_error("seeds/final_accs length mismatch in " +
                               path.string());
    eval::Curve curve{condition, {}};
    for (std::size_t i = 0; i < accs.size(); ++i) {
      rows.push_back(
          {condition, seeds[i].get<std::uint64_t>(), accs[i].get<double>()});
      curve.points.emplace_back(static_cast<int>(i), accs[i].get<double>());
    }
    by_seed.push_back(std::move(curve));
  }

  const auto comparison = eval::compare_runs(rows);
  fs::create_directories(o.out);
  eval::write_comparison_csv(comparison,
                             (fs::path(o.out) / "comparison.csv").string());
  eval::write_bar_chart(comparison, "DOWNSTREAM ACCURACY",
                        (fs::path(o.out) / "accuracy_bars.png").string());
  eval::write_line_chart(by_seed, "ACCURACY BY RUN",
                         (fs::path(o.out) / "accuracy_by_run.png").string(),
                         "RUN");
  for (const auto& row : comparison)
    std::printf("%s: n=%d mean %.4f std %.4f\n", row.condition.c_str(),
                row.n_seeds, row.mean_acc, row.std_acc);
}

void print_usage(std::FILE* out) {
  std::fputs("usage: cssl <command> [options]\n"
             "commands:\n"
             "  gen-perms      generate a jigsaw permutation set\n"
             "  pretrain       pretext-task pretraining\n"
             "  transfer-eval  downstream training from a checkpoint\n"
             "  compare        aggregate run summaries\n"
             "run 'cssl <command> --help' for command options\n",
             out);
}

// was the flag spelled out on the command line (config-file keys do not count)
bool given_on_cli(int argc, char** argv, const std::string& name) {
  const std::string prefix = name + "=";
  for (int i = 1; i < argc; ++i) {
    const std::string_view arg = argv[i];
    if (arg == name || arg.substr(0, prefix.size()) == prefix) return true;
  }
  return false;
}

} // namespace

// git-style dispatch: each command is its own CLI::App parsed from argv+1,
// so per-command config files keep a flat key namespace and a run's
// config.resolved can be fed back through --config unchanged.
int main(int argc, char** argv) {
  if (argc < 2) {
    print_usage(stderr);
    return 2;
  }
  const std::string cmd = argv[1];
  if (cmd == "-h" || cmd == "--help") {
    print_usage(stdout);
    return 0;
  }

  CLI::App app{"", "cssl " + cmd};
  std::function<void()> body;

  GenPermsOpts gp;
  PretrainOpts pt;
  TransferOpts tf;
  CompareOpts cp;

  if (cmd == "gen-perms") {
    app.description("generate a jigsaw permutation set");
    app.add_option("--n-patches", gp.n_patches)->capture_default_str();
    app.add_option("--set-size", gp.set_size)->capture_default_str();
    app.add_option("--seed", gp.seed)->capture_default_str();
    app.add_option("--out", gp.out, "output permutation file")->required();
    body = [&] { run_gen_perms(gp); };
  } else if (cmd == "pretrain") {
    app.description("pretext-task pretraining");
    app.set_config("--config", "", "key=value config file");
    app.add_option("--task", pt.task)
        ->check(CLI::IsMember({"jigsaw", "patch-pair"}))
        ->capture_default_str();
    app.add_option("--mode", pt.mode, "fixed jitter or curriculum schedule")
        ->check(CLI::IsMember({"fixed", "curriculum"}))
        ->required();
    app.add_option("--retention", pt.retention, "fixed-mode jitter retention")
        ->capture_default_str();
    app.add_option("--schedule-start", pt.schedule_start)->capture_default_str();
    app.add_option("--schedule-end", pt.schedule_end)->capture_default_str();
    app.add_option("--schedule-step", pt.schedule_step)->capture_default_str();
    app.add_option("--grid", pt.grid, "jigsaw grid side")->capture_default_str();
    app.add_option("--set-size", pt.set_size, "generated permutation count")
        ->capture_default_str();
    app.add_option("--perm-file", pt.perm_file, "use a saved permutation set");
    app.add_option("--perm-seed", pt.perm_seed)->capture_default_str();
    app.add_option("--input-size", pt.input_size, "network patch side")
        ->capture_default_str();
    app.add_option("--greyscale", pt.greyscale, "greyscale probability")
        ->capture_default_str();
    app.add_flag("--raw-pixels", pt.raw_pixels, "skip patch normalization");
    app.add_option("--epochs", pt.epochs, "fixed-mode epochs")
        ->capture_default_str();
    app.add_option("--epochs-per-level", pt.epochs_per_level)
        ->capture_default_str();
    app.add_option("--lr", pt.lr)->capture_default_str();
    app.add_option("--batch-size", pt.batch_size)->capture_default_str();
    app.add_option("--seeds", pt.seeds, "comma-separated run seeds")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--out", pt.out, "output directory")->required();
    app.add_flag("--parallel", pt.parallel, "one thread per seed");
    add_data_options(app, pt.data);
    body = [&] {
      const bool schedule_flags = given_on_cli(argc - 1, argv + 1, "--schedule-start") ||
                                  given_on_cli(argc - 1, argv + 1, "--schedule-end") ||
                                  given_on_cli(argc - 1, argv + 1, "--schedule-step");
      if (pt.mode == "fixed" && schedule_flags)
        throw std::invalid_argument("schedule flags conflict with --mode fixed");
      if (pt.mode == "curriculum" && given_on_cli(argc - 1, argv + 1, "--retention"))
        throw std::invalid_argument("--retention conflicts with --mode curriculum");
      run_pretrain(pt, app.config_to_str(true, false));
    };
  } else if (cmd == "transfer-eval") {
    app.description("downstream training from a checkpoint");
    app.set_config("--config", "", "key=value config file");
    auto* ckpt = app.add_option("--checkpoint", tf.checkpoint,
                                "pretext checkpoint to transfer");
    app.add_flag("--scratch", tf.scratch, "no-pretraining baseline")
        ->excludes(ckpt);
    app.add_option("--condition", tf.condition, "label used by compare");
    app.add_flag("--linear-probe", tf.linear_probe,
                 "freeze the encoder, train only the head");
    app.add_option("--epochs", tf.epochs)->capture_default_str();
    app.add_option("--lr", tf.lr)->capture_default_str();
    app.add_option("--batch-size", tf.batch_size)->capture_default_str();
    app.add_option("--seeds", tf.seeds, "comma-separated run seeds")
        ->delimiter(',')
        ->capture_default_str();
    app.add_option("--out", tf.out, "output directory")->required();
    app.add_flag("--parallel", tf.parallel, "one thread per seed");
    add_data_options(app, tf.data);
    body = [&] { run_transfer_eval(tf, app.config_to_str(true, false)); };
  } else if (cmd == "compare") {
    app.description("aggregate run summaries");
    app.add_option("--runs", cp.runs, "directory of run directories")
        ->required();
    app.add_option("--out", cp.out, "output directory")->required();
    body = [&] { run_compare(cp); };
  } else {
    std::fprintf(stderr, "unknown command: %s\n", cmd.c_str());
    print_usage(stderr);
    return 2;
  }

  try {
    app.parse(argc - 1, argv + 1);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    body();
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
