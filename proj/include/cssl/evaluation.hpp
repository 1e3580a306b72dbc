#pragma once

// Representation-quality probes: exact nearest-neighbor retrieval over
// encoder embeddings or raw pixels, neighbor label agreement, and
// per-condition run comparison emitted as CSV and chart images.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cssl/image.hpp"
#include "cssl/model.hpp"

namespace cssl::eval {

enum class Metric { euclidean, cosine };

// Frozen retrieval index; queries never mutate it, so concurrent reads are
// safe. Cosine distance is 1 - cosine similarity (zero vectors score 1).
struct EmbeddingIndex {
  int n = 0;
  int dim = 0;
  std::vector<float> vectors; // row-major n x dim
  std::vector<int> ids;       // unique, aligned with rows
  Metric metric = Metric::euclidean;
};

EmbeddingIndex make_index(std::vector<float> vectors, int dim,
                          std::vector<int> ids,
                          Metric metric = Metric::euclidean);

// Encoder embeddings of whole images resized to side (0 uses the encoder's
// pretraining reference side) and normalized like downstream samples; ids
// are 0..n-1 in input order.
EmbeddingIndex embed_images(model::ModelState& state,
                            const std::vector<Image>& images,
                            bool normalize = true, int side = 0);

// Flattened side x side pixels through the same retrieval path; the
// pixel-space baseline for embedding-space comparisons.
EmbeddingIndex pixel_index(const std::vector<Image>& images, int side);

// k ids by ascending distance, ties broken by ascending id. Distances are
// accumulated in double; k must lie in [1, N].
std::vector<std::pair<int, double>> nearest_neighbors(
    const EmbeddingIndex& index, const std::vector<float>& query, int k);

// Mean over items of the fraction of their k nearest other items (self
// excluded by row) sharing the item's label; k must lie in [1, N-1].
double neighbor_class_agreement(const EmbeddingIndex& index,
                                const std::vector<int>& labels, int k);

// One completed run distilled to its final downstream test accuracy.
struct RunSummary {
  std::string condition;
  std::uint64_t seed = 0;
  double final_acc = 0.0;
};

struct ComparisonRow {
  std::string condition;
  int n_seeds = 0;
  double mean_acc = 0.0;
  double std_acc = 0.0; // population form, so a single seed reports 0
};

// Aggregates per condition, sorted by condition name; the result is
// invariant to input record order.
std::vector<ComparisonRow> compare_runs(const std::vector<RunSummary>& runs);

// columns: condition,n_seeds,mean_acc,std_acc
void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::string& path);

// Bar of mean accuracy per condition with a +/- std whisker, y fixed to [0,1].
void write_bar_chart(const std::vector<ComparisonRow>& rows,
                     const std::string& title, const std::string& path);

// Accuracy-vs-step polylines sharing a [0,1] y-axis.
struct Curve {
  std::string name;
  std::vector<std::pair<int, double>> points; // (step, accuracy)
};
void write_line_chart(const std::vector<Curve>& curves,
                      const std::string& title, const std::string& path,
                      const std::string& x_label = "EPOCH");

} // namespace cssl::eval
