// AVX2 kernel variants. Compiled with -mavx2 only (no -mfma): the gemm_nn /
// gemm_tn and elementwise paths must perform the exact mul-then-add sequence
// of the scalar reference per output element so results are bit-identical
// across backends. Reduction ops (gemm_nt, reduce_rows, sum, moments,
// sqdist) use vector partial sums and agree with the reference up to
// rounding.

#include "kernel_table.hpp"

#if defined(CSSL_HAVE_AVX2_BACKEND)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstddef>

namespace cssl::kernels::detail::avx2 {
namespace {

constexpr int kColBlock = 1024; // keeps the b-panel L2-resident across rows
constexpr int kDotChunk = 4096; // k-chunking for the dot-product gemms

inline float hsum(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  __m128 sh = _mm_movehl_ps(lo, lo);
  lo = _mm_add_ps(lo, sh);
  sh = _mm_shuffle_ps(lo, lo, 0x55);
  lo = _mm_add_ss(lo, sh);
  return _mm_cvtss_f32(lo);
}

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(lo, lo);
  lo = _mm_add_sd(lo, sh);
  return _mm_cvtsd_f64(lo);
}

// c rows [i, i+R) over columns [j0, j1), full k accumulation.
// AIdx maps (row, kk) to the element of `a` broadcast for that row.
template <int R, class AIdx>
void gemm_rows(AIdx aval, const float* b, float* c, int k, int n, int i,
               int j0, int j1, bool acc) {
  float* crow[R];
  for (int r = 0; r < R; ++r) crow[r] = c + static_cast<std::size_t>(i + r) * n;
  int j = j0;
  for (; j + 8 <= j1; j += 8) {
    __m256 accv[R];
    for (int r = 0; r < R; ++r)
      accv[r] = acc ? _mm256_loadu_ps(crow[r] + j) : _mm256_setzero_ps();
    for (int kk = 0; kk < k; ++kk) {
      const __m256 bv = _mm256_loadu_ps(b + static_cast<std::size_t>(kk) * n + j);
      for (int r = 0; r < R; ++r)
        accv[r] = _mm256_add_ps(accv[r],
                                _mm256_mul_ps(_mm256_set1_ps(aval(i + r, kk)), bv));
    }
    for (int r = 0; r < R; ++r) _mm256_storeu_ps(crow[r] + j, accv[r]);
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
  __m256 a0 = _mm256_setzero_ps(), a1 = _mm256_setzero_ps();
  __m256 a2 = _mm256_setzero_ps(), a3 = _mm256_setzero_ps();
  int i = 0;
  for (; i + 32 <= n; i += 32) {
    a0 = _mm256_add_ps(a0, _mm256_mul_ps(_mm256_loadu_ps(x + i),
                                         _mm256_loadu_ps(y + i)));
    a1 = _mm256_add_ps(a1, _mm256_mul_ps(_mm256_loadu_ps(x + i + 8),
                                         _mm256_loadu_ps(y + i + 8)));
    a2 = _mm256_add_ps(a2, _mm256_mul_ps(_mm256_loadu_ps(x + i + 16),
                                         _mm256_loadu_ps(y + i + 16)));
    a3 = _mm256_add_ps(a3, _mm256_mul_ps(_mm256_loadu_ps(x + i + 24),
                                         _mm256_loadu_ps(y + i + 24)));
  }
  for (; i + 8 <= n; i += 8)
    a0 = _mm256_add_ps(a0, _mm256_mul_ps(_mm256_loadu_ps(x + i),
                                         _mm256_loadu_ps(y + i)));
  float s = hsum(_mm256_add_ps(_mm256_add_ps(a0, a1), _mm256_add_ps(a2, a3)));
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
    const __m256 bv = _mm256_set1_ps(bias[r]);
    int c = 0;
    for (; c + 8 <= cols; c += 8)
      _mm256_storeu_ps(row + c, _mm256_add_ps(_mm256_loadu_ps(row + c), bv));
    for (; c < cols; ++c) row[c] += bias[r];
  }
}

void bias_add_cols(float* x, const float* bias, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    float* row = x + static_cast<std::size_t>(r) * cols;
    int c = 0;
    for (; c + 8 <= cols; c += 8)
      _mm256_storeu_ps(row + c, _mm256_add_ps(_mm256_loadu_ps(row + c),
                                              _mm256_loadu_ps(bias + c)));
    for (; c < cols; ++c) row[c] += bias[c];
  }
}

void reduce_rows(const float* x, float* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const float* row = x + static_cast<std::size_t>(r) * cols;
    __m256 acc = _mm256_setzero_ps();
    int c = 0;
    for (; c + 8 <= cols; c += 8)
      acc = _mm256_add_ps(acc, _mm256_loadu_ps(row + c));
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
    for (; c + 8 <= cols; c += 8)
      _mm256_storeu_ps(out + c, _mm256_add_ps(_mm256_loadu_ps(out + c),
                                              _mm256_loadu_ps(row + c)));
    for (; c < cols; ++c) out[c] += row[c];
  }
}

void relu(float* x, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(x + i, _mm256_max_ps(_mm256_loadu_ps(x + i), zero));
  for (; i < n; ++i) x[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void relu_mask_backward(const float* y, float* dy, std::size_t n) {
  const __m256 zero = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(y + i), zero, _CMP_GT_OQ);
    _mm256_storeu_ps(dy + i, _mm256_and_ps(_mm256_loadu_ps(dy + i), mask));
  }
  for (; i < n; ++i)
    if (!(y[i] > 0.0f)) dy[i] = 0.0f;
}

void adam_step(float* p, const float* g, float* m, float* v, std::size_t n,
               float lr, float beta1, float beta2, float eps, float inv_bc1,
               float inv_bc2) {
  const __m256 vb1 = _mm256_set1_ps(beta1), vomb1 = _mm256_set1_ps(1.0f - beta1);
  const __m256 vb2 = _mm256_set1_ps(beta2), vomb2 = _mm256_set1_ps(1.0f - beta2);
  const __m256 vlr = _mm256_set1_ps(lr), veps = _mm256_set1_ps(eps);
  const __m256 vbc1 = _mm256_set1_ps(inv_bc1), vbc2 = _mm256_set1_ps(inv_bc2);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 gv = _mm256_loadu_ps(g + i);
    __m256 mv = _mm256_loadu_ps(m + i);
    __m256 vv = _mm256_loadu_ps(v + i);
    mv = _mm256_add_ps(_mm256_mul_ps(vb1, mv), _mm256_mul_ps(vomb1, gv));
    vv = _mm256_add_ps(_mm256_mul_ps(vb2, vv),
                       _mm256_mul_ps(vomb2, _mm256_mul_ps(gv, gv)));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    const __m256 mhat = _mm256_mul_ps(mv, vbc1);
    const __m256 vhat = _mm256_mul_ps(vv, vbc2);
    const __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), veps);
    const __m256 upd = _mm256_mul_ps(vlr, _mm256_div_ps(mhat, denom));
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
  }
  const float omb1 = 1.0f - beta1, omb2 = 1.0f - beta2;
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
  const __m256 sv = _mm256_set1_ps(scale), tv = _mm256_set1_ps(shift);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(
        y + i, _mm256_add_ps(_mm256_mul_ps(_mm256_loadu_ps(x + i), sv), tv));
  for (; i < n; ++i) y[i] = x[i] * scale + shift;
}

void moments(const float* x, std::size_t n, double* mean, double* var) {
  __m256d s = _mm256_setzero_pd(), s2 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v8 = _mm256_loadu_ps(x + i);
    const __m256d lo = _mm256_cvtps_pd(_mm256_castps256_ps128(v8));
    const __m256d hi = _mm256_cvtps_pd(_mm256_extractf128_ps(v8, 1));
    s = _mm256_add_pd(s, lo);
    s = _mm256_add_pd(s, hi);
    s2 = _mm256_add_pd(s2, _mm256_mul_pd(lo, lo));
    s2 = _mm256_add_pd(s2, _mm256_mul_pd(hi, hi));
  }
  double sum = hsum(s), sumsq = hsum(s2);
  for (; i < n; ++i) {
    const double v = static_cast<double>(x[i]);
    sum += v;
    sumsq += v * v;
  }
  const double mu = n ? sum / static_cast<double>(n) : 0.0;
  *mean = mu;
  double va = n ? sumsq / static_cast<double>(n) - mu * mu : 0.0;
  *var = va > 0.0 ? va : 0.0;
}

double sum_f32(const float* x, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 v8 = _mm256_loadu_ps(x + i);
    s = _mm256_add_pd(s, _mm256_cvtps_pd(_mm256_castps256_ps128(v8)));
    s = _mm256_add_pd(s, _mm256_cvtps_pd(_mm256_extractf128_ps(v8, 1)));
  }
  double r = hsum(s);
  for (; i < n; ++i) r += static_cast<double>(x[i]);
  return r;
}

double sqdist(const float* a, const float* b, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    // widen before subtracting: the difference must be taken in double,
    // matching the scalar reference
    const __m256 av = _mm256_loadu_ps(a + i);
    const __m256 bv = _mm256_loadu_ps(b + i);
    const __m256d dlo = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_castps256_ps128(av)),
                                      _mm256_cvtps_pd(_mm256_castps256_ps128(bv)));
    const __m256d dhi = _mm256_sub_pd(_mm256_cvtps_pd(_mm256_extractf128_ps(av, 1)),
                                      _mm256_cvtps_pd(_mm256_extractf128_ps(bv, 1)));
    s = _mm256_add_pd(s, _mm256_mul_pd(dlo, dlo));
    s = _mm256_add_pd(s, _mm256_mul_pd(dhi, dhi));
  }
  double r = hsum(s);
  for (; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    r += d * d;
  }
  return r;
}

} // namespace

const KernelTable table = {
    &gemm_nn, &gemm_nt, &gemm_tn,  &bias_add_rows, &bias_add_cols,
    &reduce_rows, &reduce_cols, &relu, &relu_mask_backward, &adam_step,
    &scale_shift, &moments, &sum_f32, &sqdist,
};

} // namespace cssl::kernels::detail::avx2

#endif // CSSL_HAVE_AVX2_BACKEND
