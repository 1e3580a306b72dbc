#include "cssl/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>

#include "cssl/image_io.hpp"
#include "cssl/rng.hpp"

namespace cssl::data {
namespace {

namespace fs = std::filesystem;

// Luminance-diverse palette so arrangements stay separable under greyscaling.
constexpr float kPalette[10][3] = {
    {0.90f, 0.10f, 0.10f}, {0.10f, 0.75f, 0.15f}, {0.15f, 0.25f, 0.90f},
    {0.95f, 0.90f, 0.15f}, {0.85f, 0.15f, 0.85f}, {0.15f, 0.85f, 0.85f},
    {0.95f, 0.55f, 0.10f}, {0.50f, 0.15f, 0.70f}, {0.10f, 0.50f, 0.45f},
    {0.55f, 0.35f, 0.15f},
};
// Per-quadrant palette offsets. The left column (cells 0, 2) shares one tint
// and the right column (cells 1, 3) another, so patch colors alone resolve a
// jigsaw only up to vertical swaps; positional cues (grating phase, line
// continuity) must break the tie, and jitter erodes exactly those. The class
// stays decodable from whole images, where tint meets quadrant position.
constexpr int kOffsets[4] = {0, 5, 0, 5};

// substream tags per split; sample index is the third seed component
constexpr std::uint64_t kUnlabeledTag = 1, kTrainTag = 2, kTestTag = 3;

// Draw order per image is pinned: background color (3), quadrant
// brightness (4), line count (1), per line endpoints+color (7), then one
// noise draw per pixel channel. Changing it changes every dataset.
// The background is flat: a gradient would hand every patch a crop-robust
// position stamp and defeat the jitter difficulty knob.
Image render_scene(int size, int class_id, RngStream& rng) {
  float c0[3];
  for (auto& v : c0) v = static_cast<float>(rng.uniform(0.1, 0.9));
  float qb[4];
  for (auto& v : qb) v = static_cast<float>(rng.uniform(-0.06, 0.06));

  struct Line {
    float x0, y0, x1, y1, col[3];
  };
  const int n_lines = static_cast<int>(rng.uniform_int(2, 4));
  std::vector<Line> lines(n_lines);
  for (auto& l : lines) {
    l.x0 = static_cast<float>(rng.uniform(0.0, size));
    l.y0 = static_cast<float>(rng.uniform(0.0, size));
    l.x1 = static_cast<float>(rng.uniform(0.0, size));
    l.y1 = static_cast<float>(rng.uniform(0.0, size));
    for (auto& v : l.col) v = static_cast<float>(rng.uniform(0.0, 1.0));
  }

  Image img(size, size, 3);
  const int half = size / 2;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int q = (y >= half ? 2 : 0) + (x >= half ? 1 : 0);
      const int color = (class_id + kOffsets[q]) % 10;
      for (int ch = 0; ch < 3; ++ch) {
        const float noise = static_cast<float>(rng.uniform(-0.035, 0.035));
        img.at(y, x, ch) =
            0.35f * c0[ch] + 0.65f * kPalette[color][ch] + qb[q] + noise;
      }
    }

  // lines drawn last: their continuity across quadrant borders is the
  // low-level shortcut that jitter is meant to destroy
  for (const auto& l : lines) {
    const int steps = 2 * size;
    for (int s = 0; s <= steps; ++s) {
      const float t = static_cast<float>(s) / steps;
      int px = static_cast<int>(std::lround(l.x0 + t * (l.x1 - l.x0)));
      int py = static_cast<int>(std::lround(l.y0 + t * (l.y1 - l.y0)));
      px = std::clamp(px, 0, size - 1);
      py = std::clamp(py, 0, size - 1);
      for (int ch = 0; ch < 3; ++ch)
        img.at(py, px, ch) = 0.2f * img.at(py, px, ch) + 0.8f * l.col[ch];
    }
  }

  // positional grating: a faint luminance wave whose phase identifies where
  // a patch sits in the scene. The period does not divide the grid cell, so
  // cells are phase-separated; crop jitter shifts and stretches the phase,
  // which makes the cue erode as retention drops. Survives per-patch
  // normalization and greyscaling.
  constexpr float kTau = 6.2831853f;
  constexpr float kGratingPeriod = 12.0f;
  constexpr float kGratingAmp = 0.05f;
  for (int y = 0; y < size; ++y) {
    const float gy = std::sin(kTau * y / kGratingPeriod);
    for (int x = 0; x < size; ++x) {
      const float g = kGratingAmp * gy * std::sin(kTau * x / kGratingPeriod);
      for (int ch = 0; ch < 3; ++ch) img.at(y, x, ch) += g;
    }
  }

  for (auto& v : img.pixels) v = std::clamp(v, 0.0f, 1.0f);
  return img;
}

DatasetSplit synth_split(const SyntheticSpec& spec, SplitKind kind, int n,
                         std::uint64_t tag) {
  DatasetSplit split;
  split.kind = kind;
  split.class_count = spec.class_count;
  split.images.reserve(n);
  const bool labeled = kind != SplitKind::unlabeled;
  for (int i = 0; i < n; ++i) {
    const int cls = i % spec.class_count;
    RngStream rng(spec.seed, tag, static_cast<std::uint64_t>(i));
    split.images.push_back(render_scene(spec.image_size, cls, rng));
    if (labeled) split.labels.push_back(cls);
  }
  return split;
}

constexpr std::size_t kStl10Side = 96;
constexpr std::size_t kStl10Plane = kStl10Side * kStl10Side;
constexpr std::size_t kStl10Record = 3 * kStl10Plane;

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.class_count < 2 || spec.class_count > 10)
    throw std::invalid_argument("class_count must be in [2, 10]");
  if (spec.n_images < spec.class_count)
    throw std::invalid_argument("n_images must be >= class_count");
  if (spec.n_labeled_train < 1 || spec.n_labeled_test < 1)
    throw std::invalid_argument("labeled split sizes must be >= 1");
  if (spec.image_size < 8)
    throw std::invalid_argument("image_size must be >= 8");
  SyntheticDataset out;
  out.unlabeled =
      synth_split(spec, SplitKind::unlabeled, spec.n_images, kUnlabeledTag);
  out.labeled_train = synth_split(spec, SplitKind::labeled_train,
                                  spec.n_labeled_train, kTrainTag);
  out.labeled_test =
      synth_split(spec, SplitKind::labeled_test, spec.n_labeled_test, kTestTag);
  return out;
}

DatasetSplit load_stl10_files(const std::string& images_path,
                              const std::string& labels_path, SplitKind kind) {
  const auto bytes = read_all(images_path);
  if (bytes.empty() || bytes.size() % kStl10Record != 0)
    throw std::runtime_error(images_path + ": size " +
                             std::to_string(bytes.size()) +
                             " is not a multiple of the 27648-byte record");
  const std::size_t n = bytes.size() / kStl10Record;

  DatasetSplit split;
  split.kind = kind;
  split.class_count = 10;
  split.images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* rec = bytes.data() + i * kStl10Record;
    Image img(kStl10Side, kStl10Side, 3);
    // channel-major, column-major per channel
    for (int k = 0; k < 3; ++k)
      for (std::size_t c = 0; c < kStl10Side; ++c)
        for (std::size_t r = 0; r < kStl10Side; ++r)
          img.at(static_cast<int>(r), static_cast<int>(c), k) =
              static_cast<float>(rec[k * kStl10Plane + c * kStl10Side + r]) /
              255.0f;
    split.images.push_back(std::move(img));
  }

  if (kind != SplitKind::unlabeled) {
    const auto lbl = read_all(labels_path);
    if (lbl.size() != n)
      throw std::runtime_error(labels_path + ": " + std::to_string(lbl.size()) +
                               " labels for " + std::to_string(n) + " images");
    split.labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (lbl[i] < 1 || lbl[i] > 10)
        throw std::runtime_error(labels_path + ": label byte " +
                                 std::to_string(int(lbl[i])) +
                                 " outside [1, 10] at record " +
                                 std::to_string(i));
      split.labels.push_back(int(lbl[i]) - 1);
    }
  }
  return split;
}

DatasetSplit load_stl10_binary(const std::string& dir, SplitKind kind) {
  const fs::path root(dir);
  switch (kind) {
    case SplitKind::unlabeled:
      return load_stl10_files((root / "unlabeled_X.bin").string(), "", kind);
    case SplitKind::labeled_train:
      return load_stl10_files((root / "train_X.bin").string(),
                              (root / "train_y.bin").string(), kind);
    case SplitKind::labeled_test:
      return load_stl10_files((root / "test_X.bin").string(),
                              (root / "test_y.bin").string(), kind);
  }
  throw std::logic_error("unreachable split kind");
}

DatasetSplit load_image_folder(const std::string& dir, int out_size,
                               int* skipped) {
  if (out_size < 1) throw std::invalid_argument("out_size must be >= 1");
  if (!fs::is_directory(dir))
    throw std::runtime_error("not a directory: " + dir);

  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  if (class_dirs.empty())
    throw std::runtime_error("no class subdirectories in " + dir);

  DatasetSplit split;
  split.kind = SplitKind::labeled_train;
  split.class_count = static_cast<int>(class_dirs.size());
  int skip_count = 0;
  for (std::size_t cls = 0; cls < class_dirs.size(); ++cls) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[cls]))
      if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      Image img;
      try {
        img = io::read_image(file.string());
      } catch (const std::exception& e) {
        std::cerr << "warning: skipping " << file.string() << ": " << e.what()
                  << '\n';
        ++skip_count;
        continue;
      }
      if (img.channels == 1) {
        Image rgb(img.height, img.width, 3);
        for (int y = 0; y < img.height; ++y)
          for (int x = 0; x < img.width; ++x)
            for (int ch = 0; ch < 3; ++ch) rgb.at(y, x, ch) = img.at(y, x, 0);
        img = std::move(rgb);
      }
      split.images.push_back(resize_bilinear(img, out_size, out_size));
      split.labels.push_back(static_cast<int>(cls));
    }
  }
  if (skipped) *skipped = skip_count;
  if (split.images.empty())
    throw std::runtime_error("no readable images under " + dir);
  return split;
}

PretextProvider::PretextProvider(
    std::shared_ptr<const std::vector<Image>> images, tasks::TaskKind kind,
    std::shared_ptr<const perms::PermutationSet> perm_set,
    transforms::TransformConfig cfg, std::uint64_t seed, bool frozen)
    : images_(std::move(images)), kind_(kind), perm_set_(std::move(perm_set)),
      cfg_(cfg), seed_(seed), frozen_(frozen) {
  if (!images_ || images_->empty())
    throw std::invalid_argument("pretext provider needs images");
  if (kind_ == tasks::TaskKind::jigsaw && !perm_set_)
    throw std::invalid_argument("jigsaw provider needs a permutation set");
}

int PretextProvider::size() const { return static_cast<int>(images_->size()); }

int PretextProvider::n_classes() const {
  return kind_ == tasks::TaskKind::jigsaw ? static_cast<int>(perm_set_->size())
                                          : 8;
}

int PretextProvider::patches_per_sample() const {
  return kind_ == tasks::TaskKind::jigsaw ? perm_set_->n_patches : 2;
}

tasks::PretextSample PretextProvider::make(int epoch, int index) const {
  RngStream rng(seed_,
                frozen_ ? 0 : static_cast<std::uint64_t>(epoch),
                static_cast<std::uint64_t>(index));
  const Image& img = (*images_)[index];
  return kind_ == tasks::TaskKind::jigsaw
             ? tasks::make_jigsaw_sample(img, *perm_set_, cfg_, rng)
             : tasks::make_patch_pair_sample(img, cfg_, rng);
}

DownstreamProvider::DownstreamProvider(std::shared_ptr<const DatasetSplit> split,
                                       int input_size, bool normalize)
    : split_(std::move(split)), input_size_(input_size), normalize_(normalize) {
  if (!split_ || split_->images.empty())
    throw std::invalid_argument("downstream provider needs a labeled split");
  if (split_->labels.size() != split_->images.size())
    throw std::invalid_argument("downstream provider needs labels");
}

int DownstreamProvider::size() const {
  return static_cast<int>(split_->images.size());
}

int DownstreamProvider::n_classes() const { return split_->class_count; }

tasks::PretextSample DownstreamProvider::make(int, int index) const {
  tasks::PretextSample s;
  s.label = split_->labels[index];
  Patch p;
  p.data = resize_bilinear(split_->images[index], input_size_, input_size_);
  if (normalize_) p = transforms::normalize_patch(p);
  s.patches.push_back(std::move(p));
  return s;
}

} // namespace cssl::data
