// NEON kernel variants (aarch64). Mirrors the AVX2 structure at 4-wide;
// the double-accumulation reductions (moments, sum, sqdist) reuse the
// scalar reference, they are nowhere near the hot path.

#include "kernel_table.hpp"

#if defined(CSSL_HAVE_NEON_BACKEND)

#include <arm_neon.h>

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "reference_impl.inl"

namespace cssl::kernels::detail::neon {
namespace {

constexpr int kColBlock = 1024;
constexpr int kDotChunk = 4096;

inline float hsum(float32x4_t v) { return vaddvq_f32(v); }

template <int R, class AIdx>
void gemm_rows(AIdx aval, const float* b, float* c, int k, int n, int i,
               int j0, int j1, bool acc) {
  float* crow[R];
  for (int r = 0; r < R; ++r) crow[r] = c + static_cast<std::size_t>(i + r) * n;
  int j = j0;
  for (; j + 4 <= j1; j += 4) {
    float32x4_t accv[R];
    for (int r = 0; r < R; ++r)
      accv[r] = acc ? vld1q_f32(crow[r] + j) : vdupq_n_f32(0.0f);
    for (int kk = 0; kk < k; ++kk) {
      const float32x4_t bv = vld1q_f32(b + static_cast<std::size_t>(kk) * n + j);
      for (int r = 0; r < R; ++r)
        accv[r] = vaddq_f32(accv[r], vmulq_n_f32(bv, aval(i + r, kk)));
    }
    for (int r = 0; r < R; ++r) vst1q_f32(crow[r] + j, accv[r]);
  }
  for (; j < j1; ++j) {
    for (int r = 0; r < R; ++r) {
      float s = acc ? crow[r][j] : 0.0f;
      for (int kk = 0; kk < k; ++kk)
        s += aval(i + r, kk) * b[static_cast<std::size_t>(kk) * n + j];
      crow[r][j] = s;
    }
  }
}

template <class AIdx>
void gemm_broadcast(AIdx aval, const float* b, float* c, int m, int k, int n,
                    bool acc) {
  for (int j0 = 0; j0 < n; j0 += kColBlock) {
    const int j1 = std::min(n, j0 + kColBlock);
    int i = 0;
    for (; i + 4 <= m; i += 4) gemm_rows<4>(aval, b, c, k, n, i, j0, j1, acc);
    for (; i < m; ++i) gemm_rows<1>(aval, b, c, k, n, i, j0, j1, acc);
  }
}

void gemm_nn(const float* a, const float* b, float* c, int m, int k, int n,
             bool acc) {
  gemm_broadcast(
      [a, k](int row, int kk) { return a[static_cast<std::size_t>(row) * k + kk]; },
      b, c, m, k, n, acc);
}

void gemm_tn(const float* a, const float* b, float* c, int m, int k, int n,
             bool acc) {
  gemm_broadcast(
      [a, m](int row, int kk) { return a[static_cast<std::size_t>(kk) * m + row]; },
      b, c, m, k, n, acc);
}

float dot(const float* x, const float* y, int n) {
  float32x4_t a0 = vdupq_n_f32(0.0f), a1 = vdupq_n_f32(0.0f);
  float32x4_t a2 = vdupq_n_f32(0.0f), a3 = vdupq_n_f32(0.0f);
  int i = 0;
  for (; i + 16 <= n; i += 16) {
    a0 = vaddq_f32(a0, vmulq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
    a1 = vaddq_f32(a1, vmulq_f32(vld1q_f32(x + i + 4), vld1q_f32(y + i + 4)));
    a2 = vaddq_f32(a2, vmulq_f32(vld1q_f32(x + i + 8), vld1q_f32(y + i + 8)));
    a3 = vaddq_f32(a3, vmulq_f32(vld1q_f32(x + i + 12), vld1q_f32(y + i + 12)));
  }
  for (; i + 4 <= n; i += 4)
    a0 = vaddq_f32(a0, vmulq_f32(vld1q_f32(x + i), vld1q_f32(y + i)));
  float s = hsum(vaddq_f32(vaddq_f32(a0, a1), vaddq_f32(a2, a3)));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void gemm_nt(const float* a, const float* b, float* c, int m, int k, int n,
             bool acc) {
  if (!acc) {
    for (std::size_t i = 0, e = static_cast<std::size_t>(m) * n; i < e; ++i)
      c[i] = 0.0f;
  }
  for (int k0 = 0; k0 < k; k0 += kDotChunk) {
    const int kc = std::min(k - k0, kDotChunk);
    for (int i = 0; i < m; ++i) {
      const float* arow = a + static_cast<std::size_t>(i) * k + k0;
      float* crow = c + static_cast<std::size_t>(i) * n;
      for (int j = 0; j < n; ++j)
        crow[j] += dot(arow, b + static_cast<std::size_t>(j) * k + k0, kc);
    }
  }
}

void bias_add_rows(float* x, const float* bias, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    float* row = x + static_cast<std::size_t>(r) * cols;
    const float32x4_t bv = vdupq_n_f32(bias[r]);
    int c = 0;
    for (; c + 4 <= cols; c += 4)
      vst1q_f32(row + c, vaddq_f32(vld1q_f32(row + c), bv));
    for (; c < cols; ++c) row[c] += bias[r];
  }
}

void bias_add_cols(float* x, const float* bias, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    float* row = x + static_cast<std::size_t>(r) * cols;
    int c = 0;
    for (; c + 4 <= cols; c += 4)
      vst1q_f32(row + c, vaddq_f32(vld1q_f32(row + c), vld1q_f32(bias + c)));
    for (; c < cols; ++c) row[c] += bias[c];
  }
}

void reduce_rows(const float* x, float* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* row = x + static_cast<std::size_t>(r) * cols;
    float32x4_t acc = vdupq_n_f32(0.0f);
    int c = 0;
    for (; c + 4 <= cols; c += 4) acc = vaddq_f32(acc, vld1q_f32(row + c));
    float s = hsum(acc);
    for (; c < cols; ++c) s += row[c];
    out[r] = s;
  }
}

void reduce_cols(const float* x, float* out, int rows, int cols) {
  for (int c = 0; c < cols; ++c) out[c] = 0.0f;
  for (int r = 0; r < rows; ++r) {
    const float* row = x + static_cast<std::size_t>(r) * cols;
    int c = 0;
    for (; c + 4 <= cols; c += 4)
      vst1q_f32(out + c, vaddq_f32(vld1q_f32(out + c), vld1q_f32(row + c)));
    for (; c < cols; ++c) out[c] += row[c];
  }
}

void relu(float* x, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(x + i, vmaxq_f32(vld1q_f32(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_mask_backward(const float* y, float* dy, std::size_t n) {
  const float32x4_t zero = vdupq_n_f32(0.0f);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const uint32x4_t mask = vcgtq_f32(vld1q_f32(y + i), zero);
    const float32x4_t dv = vld1q_f32(dy + i);
    vst1q_f32(dy + i, vreinterpretq_f32_u32(
                          vandq_u32(vreinterpretq_u32_f32(dv), mask)));
  }
  for (; i < n; ++i)
    if (!(y[i] > 0.0f)) dy[i] = 0.0f;
}

void adam_step(float* p, const float* g, float* m, float* v, std::size_t n,
               float lr, float beta1, float beta2, float eps, float inv_bc1,
               float inv_bc2) {
  const float omb1 = 1.0f - beta1, omb2 = 1.0f - beta2;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const float32x4_t gv = vld1q_f32(g + i);
    float32x4_t mv = vld1q_f32(m + i);
    float32x4_t vv = vld1q_f32(v + i);
    mv = vaddq_f32(vmulq_n_f32(mv, beta1), vmulq_n_f32(gv, omb1));
    vv = vaddq_f32(vmulq_n_f32(vv, beta2), vmulq_n_f32(vmulq_f32(gv, gv), omb2));
    vst1q_f32(m + i, mv);
    vst1q_f32(v + i, vv);
    const float32x4_t mhat = vmulq_n_f32(mv, inv_bc1);
    const float32x4_t vhat = vmulq_n_f32(vv, inv_bc2);
    const float32x4_t denom = vaddq_f32(vsqrtq_f32(vhat), vdupq_n_f32(eps));
    const float32x4_t upd = vmulq_n_f32(vdivq_f32(mhat, denom), lr);
    vst1q_f32(p + i, vsubq_f32(vld1q_f32(p + i), upd));
  }
  for (; i < n; ++i) {
    const float gi = g[i];
    m[i] = beta1 * m[i] + omb1 * gi;
    v[i] = beta2 * v[i] + omb2 * (gi * gi);
    const float mhat = m[i] * inv_bc1;
    const float vhat = v[i] * inv_bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
  }
}

void scale_shift(const float* x, float* y, std::size_t n, float scale,
                 float shift) {
  const float32x4_t tv = vdupq_n_f32(shift);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4)
    vst1q_f32(y + i, vaddq_f32(vmulq_n_f32(vld1q_f32(x + i), scale), tv));
  for (; i < n; ++i) y[i] = x[i] * scale + shift;
}

} // namespace

const KernelTable table = {
    &gemm_nn, &gemm_nt, &gemm_tn, &bias_add_rows, &bias_add_cols,
    &reduce_rows, &reduce_cols, &relu, &relu_mask_backward, &adam_step,
    &scale_shift, &ref::moments<float>, &ref::sum<float>, &ref::sqdist<float>,
};

} // namespace cssl::kernels::detail::neon

#endif // CSSL_HAVE_NEON_BACKEND
