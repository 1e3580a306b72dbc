#pragma once

// Dataset ingestion and the dataset-to-trainer bridge. Three sources: an
// STL-10-style binary archive, a folder of class subdirectories, and a
// deterministic synthetic generator used by the acceptance experiments.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "cssl/image.hpp"
#include "cssl/permutations.hpp"
#include "cssl/tasks.hpp"
#include "cssl/training.hpp"
#include "cssl/transforms.hpp"

namespace cssl::data {

enum class SplitKind { unlabeled, labeled_train, labeled_test };

struct DatasetSplit {
  SplitKind kind = SplitKind::unlabeled;
  std::vector<Image> images;
  std::vector<int> labels; // empty for unlabeled; values in [0, class_count)
  int class_count = 0;
};

// 2x2 colored-quadrant scenes over a flat background with a positional
// grating, crossed by full-image lines; grating phase and line continuity are
// the jitterable cross-patch cues.
// The class is the quadrant color arrangement; each split is balanced to
// within one image per class and generated from its own seed substream.
struct SyntheticSpec {
  int n_images = 2000; // unlabeled split size
  int n_labeled_train = 500;
  int n_labeled_test = 800;
  int image_size = 64;
  int class_count = 10; // 2..10: arrangements over the fixed 10-color palette
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  DatasetSplit unlabeled, labeled_train, labeled_test;
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// STL-10 binary records: 3x96x96 bytes, channel-major, column-major within a
// channel; label bytes are 1-based. The directory variant expects the
// published names (train_X.bin/train_y.bin, test_X.bin/test_y.bin,
// unlabeled_X.bin).
DatasetSplit load_stl10_binary(const std::string& dir, SplitKind kind);
DatasetSplit load_stl10_files(const std::string& images_path,
                              const std::string& labels_path, SplitKind kind);

// Class per sorted subfolder name; images resized to out_size x out_size.
// Unreadable files are skipped with a warning on stderr (count via skipped);
// a directory yielding no images is an error.
DatasetSplit load_image_folder(const std::string& dir, int out_size,
                               int* skipped = nullptr);

// Pretext samples over a shared image list. Substream (seed, epoch, index);
// frozen providers pin epoch to 0 so evaluation sets stay fixed across epochs.
class PretextProvider : public train::SampleProvider {
 public:
  PretextProvider(std::shared_ptr<const std::vector<Image>> images,
                  tasks::TaskKind kind,
                  std::shared_ptr<const perms::PermutationSet> perm_set,
                  transforms::TransformConfig cfg, std::uint64_t seed,
                  bool frozen = false);

  int size() const override;
  int n_classes() const override;
  int patches_per_sample() const override;
  tasks::PretextSample make(int epoch, int index) const override;

 private:
  std::shared_ptr<const std::vector<Image>> images_;
  tasks::TaskKind kind_;
  std::shared_ptr<const perms::PermutationSet> perm_set_;
  transforms::TransformConfig cfg_;
  std::uint64_t seed_;
  bool frozen_;
};

// Labeled whole images resized to input_size (which may exceed the pretext
// patch side; the encoder pools globally); single patch, no stochastic
// transforms, so epoch is irrelevant.
class DownstreamProvider : public train::SampleProvider {
 public:
  DownstreamProvider(std::shared_ptr<const DatasetSplit> split, int input_size,
                     bool normalize);

  int size() const override;
  int n_classes() const override;
  int patches_per_sample() const override { return 1; }
  tasks::PretextSample make(int epoch, int index) const override;

 private:
  std::shared_ptr<const DatasetSplit> split_;
  int input_size_;
  bool normalize_;
};

} // namespace cssl::data
