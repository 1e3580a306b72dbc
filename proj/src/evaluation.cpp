#include "cssl/evaluation.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <stdexcept>

#include "cssl/image_io.hpp"
#include "cssl/kernels.hpp"
#include "cssl/transforms.hpp"

namespace cssl::eval {

namespace {

double row_distance(const EmbeddingIndex& idx, const float* q, int row) {
  const float* v = idx.vectors.data() + static_cast<std::size_t>(row) * idx.dim;
  if (idx.metric == Metric::euclidean)
    return std::sqrt(kernels::sqdist(q, v, static_cast<std::size_t>(idx.dim)));
  double dot = 0, qq = 0, vv = 0;
  for (int i = 0; i < idx.dim; ++i) {
    dot += static_cast<double>(q[i]) * v[i];
    qq += static_cast<double>(q[i]) * q[i];
    vv += static_cast<double>(v[i]) * v[i];
  }
  if (qq == 0 || vv == 0) return 1.0;
  return 1.0 - dot / std::sqrt(qq * vv);
}

} // namespace

EmbeddingIndex make_index(std::vector<float> vectors, int dim,
                          std::vector<int> ids, Metric metric) {
  if (dim < 1) throw std::invalid_argument("index dim must be positive");
  if (ids.empty()) throw std::invalid_argument("index needs at least one row");
  if (vectors.size() != ids.size() * static_cast<std::size_t>(dim))
    throw std::invalid_argument("vector payload does not match n x dim");
  std::vector<int> sorted = ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw std::invalid_argument("index ids must be unique");
  EmbeddingIndex idx;
  idx.n = static_cast<int>(ids.size());
  idx.dim = dim;
  idx.vectors = std::move(vectors);
  idx.ids = std::move(ids);
  idx.metric = metric;
  return idx;
}

EmbeddingIndex embed_images(model::ModelState& state,
                            const std::vector<Image>& images, bool normalize,
                            int side) {
  if (images.empty()) throw std::invalid_argument("no images to embed");
  const auto& spec = state.encoder_spec();
  if (side <= 0) side = spec.input_size;
  const int d = spec.embedding_dim;
  std::vector<float> rows;
  rows.reserve(images.size() * static_cast<std::size_t>(d));
  constexpr int kBatch = 64;
  std::vector<Image> prepared;
  prepared.reserve(kBatch);
  std::vector<float> emb;
  for (std::size_t start = 0; start < images.size(); start += kBatch) {
    const std::size_t stop = std::min(images.size(), start + kBatch);
    prepared.clear();
    for (std::size_t i = start; i < stop; ++i) {
      if (images[i].channels != spec.channels)
        throw std::invalid_argument("image channel count does not match the encoder");
      Patch p{resize_bilinear(images[i], side, side), 0, 0};
      if (normalize) p = transforms::normalize_patch(p);
      prepared.push_back(std::move(p.data));
    }
    std::vector<const Image*> ptrs;
    ptrs.reserve(prepared.size());
    for (const auto& img : prepared) ptrs.push_back(&img);
    auto slab = model::pack_slab(ptrs, spec.channels, side);
    state.encoder().forward(slab, emb);
    rows.insert(rows.end(), emb.begin(), emb.end());
  }
  std::vector<int> ids(images.size());
  std::iota(ids.begin(), ids.end(), 0);
  return make_index(std::move(rows), d, std::move(ids));
}

EmbeddingIndex pixel_index(const std::vector<Image>& images, int side) {
  if (images.empty()) throw std::invalid_argument("no images to index");
  if (side < 1) throw std::invalid_argument("side must be positive");
  const int ch = images.front().channels;
  std::vector<float> rows;
  rows.reserve(images.size() * static_cast<std::size_t>(side) * side * ch);
  for (const auto& img : images) {
    if (img.channels != ch)
      throw std::invalid_argument("images must share a channel count");
    const Image r = resize_bilinear(img, side, side);
    rows.insert(rows.end(), r.pixels.begin(), r.pixels.end());
  }
  std::vector<int> ids(images.size());
  std::iota(ids.begin(), ids.end(), 0);
  return make_index(std::move(rows), side * side * ch, std::move(ids));
}

std::vector<std::pair<int, double>> nearest_neighbors(
    const EmbeddingIndex& index, const std::vector<float>& query, int k) {
  if (static_cast<int>(query.size()) != index.dim)
    throw std::invalid_argument("query dimension does not match the index");
  if (k < 1 || k > index.n)
    throw std::invalid_argument("k must lie in [1, N]");
  std::vector<std::pair<double, int>> scored(index.n);
  for (int r = 0; r < index.n; ++r)
    scored[r] = {row_distance(index, query.data(), r), index.ids[r]};
  std::sort(scored.begin(), scored.end());
  std::vector<std::pair<int, double>> out(k);
  for (int i = 0; i < k; ++i) out[i] = {scored[i].second, scored[i].first};
  return out;
}

double neighbor_class_agreement(const EmbeddingIndex& index,
                                const std::vector<int>& labels, int k) {
  if (static_cast<int>(labels.size()) != index.n)
    throw std::invalid_argument("labels must align with the index");
  if (k < 1 || k >= index.n)
    throw std::invalid_argument("k must lie in [1, N-1]");
  double total = 0;
  std::vector<std::pair<double, int>> scored;
  for (int i = 0; i < index.n; ++i) {
    const float* q = index.vectors.data() + static_cast<std::size_t>(i) * index.dim;
    scored.clear();
    for (int j = 0; j < index.n; ++j) {
      if (j == i) continue;
      scored.emplace_back(row_distance(index, q, j), j);
    }
    std::sort(scored.begin(), scored.end(),
              [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first < b.first;
                return index.ids[a.second] < index.ids[b.second];
              });
    int matches = 0;
    for (int t = 0; t < k; ++t) matches += labels[scored[t].second] == labels[i];
    total += static_cast<double>(matches) / k;
  }
  return total / index.n;
}

std::vector<ComparisonRow> compare_runs(const std::vector<RunSummary>& runs) {
  if (runs.empty()) throw std::invalid_argument("no runs to compare");
  std::map<std::string, std::vector<double>> groups;
  for (const auto& r : runs) {
    if (r.condition.empty())
      throw std::invalid_argument("run has an empty condition name");
    if (!(r.final_acc >= 0.0 && r.final_acc <= 1.0))
      throw std::invalid_argument("accuracy out of range for condition " +
                                  r.condition);
    groups[r.condition].push_back(r.final_acc);
  }
  std::vector<ComparisonRow> rows;
  rows.reserve(groups.size());
  for (auto& [name, accs] : groups) {
    std::sort(accs.begin(), accs.end()); // input-order invariance of the sums
    const double mean =
        std::accumulate(accs.begin(), accs.end(), 0.0) / accs.size();
    double varsum = 0;
    for (double a : accs) varsum += (a - mean) * (a - mean);
    rows.push_back({name, static_cast<int>(accs.size()), mean,
                    std::sqrt(varsum / accs.size())});
  }
  return rows;
}

void write_comparison_csv(const std::vector<ComparisonRow>& rows,
                          const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "condition,n_seeds,mean_acc,std_acc\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%d,%.6f,%.6f\n", r.condition.c_str(),
                  r.n_seeds, r.mean_acc, r.std_acc);
    out << buf;
  }
  if (!out.flush()) throw std::runtime_error("cannot write " + path);
}

namespace {

// 5x7 glyphs, MSB of the low 5 bits is the leftmost column
struct Glyph {
  char ch;
  std::uint8_t rows[7];
};

constexpr Glyph kFont[] = {
    {' ', {0, 0, 0, 0, 0, 0, 0}},
    {'.', {0, 0, 0, 0, 0, 0x0C, 0x0C}},
    {',', {0, 0, 0, 0, 0x0C, 0x04, 0x08}},
    {'-', {0, 0, 0, 0x1F, 0, 0, 0}},
    {'%', {0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13}},
    {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
    {':', {0, 0x0C, 0x0C, 0, 0x0C, 0x0C, 0}},
    {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
    {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
    {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
    {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
    {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
    {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
    {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
    {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
    {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
    {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
    {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
    {'A', {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'B', {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E}},
    {'C', {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E}},
    {'D', {0x1C, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1C}},
    {'E', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F}},
    {'F', {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10}},
    {'G', {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F}},
    {'H', {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11}},
    {'I', {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
    {'J', {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C}},
    {'K', {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11}},
    {'L', {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F}},
    {'M', {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11}},
    {'N', {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11}},
    {'O', {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'P', {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10}},
    {'Q', {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D}},
    {'R', {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11}},
    {'S', {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E}},
    {'T', {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04}},
    {'U', {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E}},
    {'V', {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04}},
    {'W', {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A}},
    {'X', {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11}},
    {'Y', {0x11, 0x11, 0x11, 0x0A, 0x04, 0x04, 0x04}},
    {'Z', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F}},
};

const std::uint8_t* glyph_rows(char ch) {
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
  for (const auto& g : kFont)
    if (g.ch == up) return g.rows;
  return kFont[0].rows;
}

struct Canvas {
  Image img;

  Canvas(int w, int h) : img(h, w, 3) {
    std::fill(img.pixels.begin(), img.pixels.end(), 1.0f);
  }

  void px(int x, int y, const float* c) {
    if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
    for (int k = 0; k < 3; ++k) img.at(y, x, k) = c[k];
  }

  void fill_rect(int x0, int y0, int x1, int y1, const float* c) {
    for (int y = std::max(0, y0); y <= std::min(img.height - 1, y1); ++y)
      for (int x = std::max(0, x0); x <= std::min(img.width - 1, x1); ++x)
        px(x, y, c);
  }

  void line(int x0, int y0, int x1, int y1, const float* c) {
    const int steps = std::max(std::abs(x1 - x0), std::abs(y1 - y0)) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      px(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
         static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
    }
  }

  // 6px horizontal advance per glyph
  void text(int x, int y, const std::string& s, const float* c) {
    for (std::size_t i = 0; i < s.size(); ++i) {
      const std::uint8_t* rows = glyph_rows(s[i]);
      for (int r = 0; r < 7; ++r)
        for (int col = 0; col < 5; ++col)
          if (rows[r] & (1 << (4 - col)))
            px(x + static_cast<int>(i) * 6 + col, y + r, c);
    }
  }
};

constexpr float kBlack[3] = {0.05f, 0.05f, 0.05f};
constexpr float kGrid[3] = {0.85f, 0.85f, 0.85f};
constexpr float kSeries[6][3] = {
    {0.20f, 0.45f, 0.80f}, {0.85f, 0.45f, 0.10f}, {0.20f, 0.65f, 0.30f},
    {0.75f, 0.20f, 0.25f}, {0.55f, 0.35f, 0.75f}, {0.35f, 0.35f, 0.35f},
};

constexpr int kMarginL = 56, kMarginR = 16, kMarginT = 30, kMarginB = 46;

void draw_frame(Canvas& cv, const std::string& title) {
  const int w = cv.img.width, h = cv.img.height;
  for (int i = 0; i <= 4; ++i) {
    const double v = i * 0.25;
    const int y = static_cast<int>(
        std::lround(h - kMarginB - v * (h - kMarginT - kMarginB)));
    cv.line(kMarginL, y, w - kMarginR, y, kGrid);
    char lbl[8];
    std::snprintf(lbl, sizeof lbl, "%.2f", v);
    cv.text(kMarginL - 28, y - 3, lbl, kBlack);
  }
  cv.line(kMarginL, kMarginT, kMarginL, h - kMarginB, kBlack);
  cv.line(kMarginL, h - kMarginB, w - kMarginR, h - kMarginB, kBlack);
  const int tx = std::max(0, (w - static_cast<int>(title.size()) * 6) / 2);
  cv.text(tx, 10, title, kBlack);
}

int map_y(const Canvas& cv, double v) {
  return static_cast<int>(std::lround(
      cv.img.height - kMarginB -
      v * (cv.img.height - kMarginT - kMarginB)));
}

} // namespace

void write_bar_chart(const std::vector<ComparisonRow>& rows,
                     const std::string& title, const std::string& path) {
  if (rows.empty()) throw std::invalid_argument("no rows to chart");
  Canvas cv(640, 420);
  draw_frame(cv, title);
  const int plot_w = cv.img.width - kMarginL - kMarginR;
  const int n = static_cast<int>(rows.size());
  const int slot = plot_w / n;
  for (int i = 0; i < n; ++i) {
    const auto& r = rows[i];
    const float* color = kSeries[i % 6];
    const int bar_w = std::max(8, slot * 55 / 100);
    const int x0 = kMarginL + i * slot + (slot - bar_w) / 2;
    const int y_top = map_y(cv, r.mean_acc);
    cv.fill_rect(x0, y_top, x0 + bar_w, map_y(cv, 0.0) - 1, color);
    const int cxb = x0 + bar_w / 2;
    const int y_hi = map_y(cv, std::min(1.0, r.mean_acc + r.std_acc));
    const int y_lo = map_y(cv, std::max(0.0, r.mean_acc - r.std_acc));
    cv.line(cxb, y_hi, cxb, y_lo, kBlack);
    cv.line(cxb - 4, y_hi, cxb + 4, y_hi, kBlack);
    cv.line(cxb - 4, y_lo, cxb + 4, y_lo, kBlack);
    char val[16];
    std::snprintf(val, sizeof val, "%.3f", r.mean_acc);
    cv.text(cxb - 15, std::max(kMarginT - 12, y_hi - 12), val, kBlack);
    std::string label = r.condition;
    const std::size_t max_chars = static_cast<std::size_t>(std::max(1, slot / 6 - 1));
    if (label.size() > max_chars) label.resize(max_chars);
    cv.text(kMarginL + i * slot + (slot - static_cast<int>(label.size()) * 6) / 2,
            cv.img.height - kMarginB + 10, label, kBlack);
  }
  io::write_png(cv.img, path);
}

void write_line_chart(const std::vector<Curve>& curves,
                      const std::string& title, const std::string& path,
                      const std::string& x_label) {
  if (curves.empty()) throw std::invalid_argument("no curves to chart");
  int xmin = curves.front().points.empty() ? 0 : curves.front().points.front().first;
  int xmax = xmin;
  for (const auto& c : curves) {
    if (c.points.empty())
      throw std::invalid_argument("curve " + c.name + " has no points");
    for (const auto& [e, a] : c.points) {
      xmin = std::min(xmin, e);
      xmax = std::max(xmax, e);
      if (!(a >= 0.0 && a <= 1.0))
        throw std::invalid_argument("accuracy out of range in curve " + c.name);
    }
  }
  if (xmax == xmin) xmax = xmin + 1;
  Canvas cv(720, 420);
  draw_frame(cv, title);
  const int plot_w = cv.img.width - kMarginL - kMarginR;
  auto map_x = [&](int e) {
    return kMarginL + static_cast<int>(std::lround(
                          static_cast<double>(e - xmin) / (xmax - xmin) * plot_w));
  };
  const int xstep = std::max(1, (xmax - xmin + 5) / 6);
  for (int e = xmin; e <= xmax; e += xstep) {
    char lbl[16];
    std::snprintf(lbl, sizeof lbl, "%d", e);
    const int lx = map_x(e);
    cv.line(lx, cv.img.height - kMarginB, lx, cv.img.height - kMarginB + 3, kBlack);
    cv.text(lx - static_cast<int>(std::strlen(lbl)) * 3,
            cv.img.height - kMarginB + 8, lbl, kBlack);
  }
  cv.text(kMarginL + plot_w / 2 - static_cast<int>(x_label.size()) * 3,
          cv.img.height - 14, x_label, kBlack);
  for (std::size_t ci = 0; ci < curves.size(); ++ci) {
    const float* color = kSeries[ci % 6];
    const auto& pts = curves[ci].points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
      cv.line(map_x(pts[i].first), map_y(cv, pts[i].second),
              map_x(pts[i + 1].first), map_y(cv, pts[i + 1].second), color);
    for (const auto& [e, a] : pts)
      cv.fill_rect(map_x(e) - 1, map_y(cv, a) - 1, map_x(e) + 1,
                   map_y(cv, a) + 1, color);
    const int ly = kMarginT + 6 + static_cast<int>(ci) * 12;
    cv.line(kMarginL + 8, ly + 3, kMarginL + 24, ly + 3, color);
    cv.text(kMarginL + 30, ly, curves[ci].name, kBlack);
  }
  io::write_png(cv.img, path);
}

} // namespace cssl::eval
