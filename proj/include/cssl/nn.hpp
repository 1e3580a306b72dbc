#pragma once

// Minimal CNN training core: conv (im2col + GEMM), relu, global average
// pooling, dense layers, softmax cross-entropy and Adam. Templated on the
// scalar type: float is the production path (dispatched SIMD kernels),
// double instantiates the same code on the scalar reference kernels for
// finite-difference gradient checking.
//
// Activations live in channel-major slabs: a[c][(b*h + y)*w + x]. Batches of
// k-patch samples fold the patches into the batch axis (row b*k + j), so one
// encoder pass serves every head arity and weight sharing is structural.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cssl/kernels.hpp"
#include "cssl/rng.hpp"

namespace cssl::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <class T>
struct ParamTensor {
  std::vector<T> w, g, m, v;

  explicit ParamTensor(std::size_t n = 0) { resize(n); }

  void resize(std::size_t n) {
    w.assign(n, T(0));
    g.assign(n, T(0));
    m.assign(n, T(0));
    v.assign(n, T(0));
  }
  std::size_t size() const { return w.size(); }

  // 2 rng draws per element
  void init_normal(RngStream& rng, double stddev) {
    for (auto& x : w) x = static_cast<T>(rng.normal(0.0, stddev));
  }

  void adam_update(const AdamConfig& cfg, long long t) {
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
    kernels::adam_step(w.data(), g.data(), m.data(), v.data(), w.size(),
                       static_cast<T>(cfg.lr), static_cast<T>(cfg.beta1),
                       static_cast<T>(cfg.beta2), static_cast<T>(cfg.eps),
                       static_cast<T>(1.0 / bc1), static_cast<T>(1.0 / bc2));
  }
};

template <class T>
struct Slab {
  std::vector<T> a;
  int c = 0, n = 0, h = 0, w = 0;

  void resize(int c_, int n_, int h_, int w_) {
    c = c_;
    n = n_;
    h = h_;
    w = w_;
    a.assign(static_cast<std::size_t>(c) * n * h * w, T(0));
  }
  std::size_t plane_size() const { return static_cast<std::size_t>(n) * h * w; }
  T* plane(int ci) { return a.data() + ci * plane_size(); }
  const T* plane(int ci) const { return a.data() + ci * plane_size(); }
};

template <class T>
class Conv2d {
 public:
  Conv2d(int in_c, int out_c, int kernel, int stride, int pad)
      : weight(static_cast<std::size_t>(out_c) * in_c * kernel * kernel),
        bias(static_cast<std::size_t>(out_c)),
        in_c_(in_c), out_c_(out_c), k_(kernel), s_(stride), p_(pad) {}

  // He initialization; bias stays zero
  void init(RngStream& rng) {
    weight.init_normal(rng, std::sqrt(2.0 / (in_c_ * k_ * k_)));
  }

  int out_dim(int in) const { return (in + 2 * p_ - k_) / s_ + 1; }
  int in_channels() const { return in_c_; }
  int out_channels() const { return out_c_; }

  void forward(const Slab<T>& x, Slab<T>& y) {
    if (x.c != in_c_) throw std::invalid_argument("conv input channel mismatch");
    const int oh = out_dim(x.h), ow = out_dim(x.w);
    y.resize(out_c_, x.n, oh, ow);
    im2col(x, oh, ow);
    const int q = in_c_ * k_ * k_;
    const int ncols = static_cast<int>(y.plane_size());
    kernels::gemm_nn(weight.w.data(), cols_.data(), y.a.data(), out_c_, q,
                     ncols);
    kernels::bias_add_rows(y.a.data(), bias.w.data(), out_c_, ncols);
  }

  // x must be the forward input (cols_ is reused); writes weight/bias grads,
  // fills dx unless null
  void backward(const Slab<T>& x, const Slab<T>& dy, Slab<T>* dx) {
    const int oh = dy.h, ow = dy.w;
    const int q = in_c_ * k_ * k_;
    const int ncols = static_cast<int>(dy.plane_size());
    kernels::gemm_nt(dy.a.data(), cols_.data(), weight.g.data(), out_c_, ncols,
                     q);
    kernels::reduce_rows(dy.a.data(), bias.g.data(), out_c_, ncols);
    if (!dx) return;
    dcols_.assign(static_cast<std::size_t>(q) * ncols, T(0));
    kernels::gemm_tn(weight.w.data(), dy.a.data(), dcols_.data(), q, out_c_,
                     ncols);
    col2im(x, dx, oh, ow);
  }

  ParamTensor<T> weight; // [out_c][in_c * k * k]
  ParamTensor<T> bias;   // [out_c]

 private:
  void im2col(const Slab<T>& x, int oh, int ow) {
    const std::size_t ncols = static_cast<std::size_t>(x.n) * oh * ow;
    cols_.resize(static_cast<std::size_t>(in_c_) * k_ * k_ * ncols);
    T* out = cols_.data();
    for (int ci = 0; ci < in_c_; ++ci) {
      const T* plane = x.plane(ci);
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          for (int b = 0; b < x.n; ++b) {
            const T* img = plane + static_cast<std::size_t>(b) * x.h * x.w;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s_ + ky - p_;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * s_ + kx - p_;
                *out++ = (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w)
                             ? T(0)
                             : img[static_cast<std::size_t>(iy) * x.w + ix];
              }
            }
          }
        }
    }
  }

  void col2im(const Slab<T>& x, Slab<T>* dx, int oh, int ow) {
    dx->resize(in_c_, x.n, x.h, x.w);
    const T* in = dcols_.data();
    for (int ci = 0; ci < in_c_; ++ci) {
      T* plane = dx->plane(ci);
      for (int ky = 0; ky < k_; ++ky)
        for (int kx = 0; kx < k_; ++kx) {
          for (int b = 0; b < x.n; ++b) {
            T* img = plane + static_cast<std::size_t>(b) * x.h * x.w;
            for (int oy = 0; oy < oh; ++oy) {
              const int iy = oy * s_ + ky - p_;
              for (int ox = 0; ox < ow; ++ox) {
                const int ix = ox * s_ + kx - p_;
                const T v = *in++;
                if (iy >= 0 && iy < x.h && ix >= 0 && ix < x.w)
                  img[static_cast<std::size_t>(iy) * x.w + ix] += v;
              }
            }
          }
        }
    }
  }

  int in_c_, out_c_, k_, s_, p_;
  std::vector<T> cols_, dcols_;
};

template <class T>
class Dense {
 public:
  Dense(int in, int out)
      : weight(static_cast<std::size_t>(in) * out), bias(out),
        in_(in), out_(out) {}

  void init(RngStream& rng) {
    weight.init_normal(rng, std::sqrt(2.0 / in_));
  }

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }

  // x: [batch x in] row-major -> y: [batch x out]
  void forward(const T* x, int batch, std::vector<T>& y) {
    y.assign(static_cast<std::size_t>(batch) * out_, T(0));
    kernels::gemm_nt(x, weight.w.data(), y.data(), batch, in_, out_);
    kernels::bias_add_cols(y.data(), bias.w.data(), batch, out_);
  }

  // dx may be null
  void backward(const T* x, const T* dy, int batch, std::vector<T>* dx) {
    kernels::gemm_tn(dy, x, weight.g.data(), out_, batch, in_);
    kernels::reduce_cols(dy, bias.g.data(), batch, out_);
    if (!dx) return;
    dx->assign(static_cast<std::size_t>(batch) * in_, T(0));
    kernels::gemm_nn(dy, weight.w.data(), dx->data(), batch, out_, in_);
  }

  ParamTensor<T> weight; // [out][in]
  ParamTensor<T> bias;   // [out]

 private:
  int in_, out_;
};

// Stack of stride/pad conv+relu stages followed by global average pooling.
// Embedding dimension equals the last stage's channel count.
template <class T>
class Encoder {
 public:
  struct Stage {
    int filters, kernel, stride;
  };

  Encoder(int in_channels, int input_size, const std::vector<Stage>& stages)
      : input_size_(input_size) {
    int c = in_channels;
    for (const auto& s : stages) {
      convs_.emplace_back(c, s.filters, s.kernel, s.stride, s.kernel / 2);
      c = s.filters;
    }
    acts_.resize(convs_.size());
  }

  void init(RngStream& rng) {
    for (auto& conv : convs_) conv.init(rng);
  }

  int embedding_dim() const { return convs_.back().out_channels(); }
  int input_size() const { return input_size_; }

  // input: [C][n*H*W] slab at input_size; emb out: [n x D] row-major
  void forward(const Slab<T>& input, std::vector<T>& emb) {
    const Slab<T>* cur = &input;
    for (std::size_t i = 0; i < convs_.size(); ++i) {
      convs_[i].forward(*cur, acts_[i]);
      kernels::relu(acts_[i].a.data(), acts_[i].a.size());
      cur = &acts_[i];
    }
    const Slab<T>& last = acts_.back();
    const int d = last.c, n = last.n;
    const int hw = last.h * last.w;
    sums_.assign(static_cast<std::size_t>(d) * n, T(0));
    kernels::reduce_rows(last.a.data(), sums_.data(), d * n, hw);
    emb.assign(static_cast<std::size_t>(n) * d, T(0));
    const T inv = T(1) / static_cast<T>(hw);
    for (int c = 0; c < d; ++c)
      for (int b = 0; b < n; ++b)
        emb[static_cast<std::size_t>(b) * d + c] =
            sums_[static_cast<std::size_t>(c) * n + b] * inv;
  }

  // demb: [n x D]; uses activations cached by the last forward; fills grads,
  // and the input gradient when dinput is non-null
  void backward(const Slab<T>& input, const std::vector<T>& demb,
                Slab<T>* dinput = nullptr) {
    const Slab<T>& last = acts_.back();
    const int d = last.c, n = last.n;
    const int hw = last.h * last.w;
    const T inv = T(1) / static_cast<T>(hw);
    dact_.resize(last.c, last.n, last.h, last.w);
    for (int c = 0; c < d; ++c) {
      T* plane = dact_.plane(c);
      for (int b = 0; b < n; ++b) {
        const T g = demb[static_cast<std::size_t>(b) * d + c] * inv;
        T* row = plane + static_cast<std::size_t>(b) * hw;
        for (int s = 0; s < hw; ++s) row[s] = g;
      }
    }
    for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
      kernels::relu_mask_backward(acts_[i].a.data(), dact_.a.data(),
                                  acts_[i].a.size());
      const Slab<T>& x = i == 0 ? input : acts_[i - 1];
      Slab<T>* dx = (i == 0) ? dinput : &dprev_;
      convs_[i].backward(x, dact_, dx);
      if (i > 0) std::swap(dact_, dprev_);
    }
  }

  std::vector<ParamTensor<T>*> params() {
    std::vector<ParamTensor<T>*> out;
    for (auto& c : convs_) {
      out.push_back(&c.weight);
      out.push_back(&c.bias);
    }
    return out;
  }
  std::vector<const ParamTensor<T>*> params() const {
    std::vector<const ParamTensor<T>*> out;
    for (const auto& c : convs_) {
      out.push_back(&c.weight);
      out.push_back(&c.bias);
    }
    return out;
  }

 private:
  int input_size_;
  std::vector<Conv2d<T>> convs_;
  std::vector<Slab<T>> acts_;
  Slab<T> dact_, dprev_;
  std::vector<T> sums_;
};

// Mean cross-entropy over the batch; fills dlogits with (softmax - onehot)/batch.
// probs (optional) receives the softmax rows.
template <class T>
double softmax_xent(const std::vector<T>& logits, const std::vector<int>& labels,
                    int batch, int classes, std::vector<T>* dlogits,
                    std::vector<T>* probs = nullptr) {
  if (dlogits) dlogits->assign(logits.size(), T(0));
  if (probs) probs->assign(logits.size(), T(0));
  double loss = 0.0;
  for (int b = 0; b < batch; ++b) {
    const T* row = logits.data() + static_cast<std::size_t>(b) * classes;
    T mx = row[0];
    for (int c = 1; c < classes; ++c) mx = row[c] > mx ? row[c] : mx;
    double z = 0.0;
    for (int c = 0; c < classes; ++c)
      z += std::exp(static_cast<double>(row[c] - mx));
    const double logz = std::log(z);
    loss -= static_cast<double>(row[labels[b]] - mx) - logz;
    for (int c = 0; c < classes; ++c) {
      const double p =
          std::exp(static_cast<double>(row[c] - mx) - logz);
      if (probs)
        (*probs)[static_cast<std::size_t>(b) * classes + c] = static_cast<T>(p);
      if (dlogits)
        (*dlogits)[static_cast<std::size_t>(b) * classes + c] =
            static_cast<T>((p - (c == labels[b] ? 1.0 : 0.0)) / batch);
    }
  }
  return loss / batch;
}

template <class T>
int argmax_row(const T* row, int n) {
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (row[i] > row[best]) best = i;
  return best;
}

} // namespace cssl::nn
