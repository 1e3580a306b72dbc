// Scalar reference kernels, templated so the float table and the double
// overloads share one definition. Accumulation order is the contract the
// SIMD backends must reproduce per output element (see kernels.hpp).

#include <cmath>
#include <cstddef>

namespace cssl::kernels::detail::ref {

template <class T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      T s = acc ? crow[j] : T(0);
      for (int kk = 0; kk < k; ++kk)
        s += arow[kk] * b[static_cast<std::size_t>(kk) * n + j];
      crow[j] = s;
    }
  }
}

template <class T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    const T* arow = a + static_cast<std::size_t>(i) * k;
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      const T* brow = b + static_cast<std::size_t>(j) * k;
      T s = acc ? crow[j] : T(0);
      for (int kk = 0; kk < k; ++kk) s += arow[kk] * brow[kk];
      crow[j] = s;
    }
  }
}

template <class T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    T* crow = c + static_cast<std::size_t>(i) * n;
    for (int j = 0; j < n; ++j) {
      T s = acc ? crow[j] : T(0);
      for (int kk = 0; kk < k; ++kk)
        s += a[static_cast<std::size_t>(kk) * m + i] *
             b[static_cast<std::size_t>(kk) * n + j];
      crow[j] = s;
    }
  }
}

template <class T>
void bias_add_rows(T* x, const T* bias, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    T* row = x + static_cast<std::size_t>(r) * cols;
    const T b = bias[r];
    for (int c = 0; c < cols; ++c) row[c] += b;
  }
}

template <class T>
void bias_add_cols(T* x, const T* bias, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    T* row = x + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) row[c] += bias[c];
  }
}

template <class T>
void reduce_rows(const T* x, T* out, int rows, int cols) {
  for (int r = 0; r < rows; ++r) {
    const T* row = x + static_cast<std::size_t>(r) * cols;
    T s = T(0);
    for (int c = 0; c < cols; ++c) s += row[c];
    out[r] = s;
  }
}

template <class T>
void reduce_cols(const T* x, T* out, int rows, int cols) {
  for (int c = 0; c < cols; ++c) out[c] = T(0);
  for (int r = 0; r < rows; ++r) {
    const T* row = x + static_cast<std::size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) out[c] += row[c];
  }
}

template <class T>
void relu(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
}

template <class T>
void relu_mask_backward(const T* y, T* dy, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (!(y[i] > T(0))) dy[i] = T(0);
}

template <class T>
void adam_step(T* p, const T* g, T* m, T* v, std::size_t n, T lr, T beta1,
               T beta2, T eps, T inv_bc1, T inv_bc2) {
  const T one_m_b1 = T(1) - beta1;
  const T one_m_b2 = T(1) - beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const T gi = g[i];
    m[i] = beta1 * m[i] + one_m_b1 * gi;
    v[i] = beta2 * v[i] + one_m_b2 * (gi * gi);
    const T mhat = m[i] * inv_bc1;
    const T vhat = v[i] * inv_bc2;
    p[i] -= lr * (mhat / (std::sqrt(vhat) + eps));
  }
}

template <class T>
void scale_shift(const T* x, T* y, std::size_t n, T scale, T shift) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] * scale + shift;
}

template <class T>
void moments(const T* x, std::size_t n, double* mean, double* var) {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = static_cast<double>(x[i]);
    s += v;
    s2 += v * v;
  }
  const double mu = n ? s / static_cast<double>(n) : 0.0;
  *mean = mu;
  double va = n ? s2 / static_cast<double>(n) - mu * mu : 0.0;
  *var = va > 0.0 ? va : 0.0;
}

template <class T>
double sum(const T* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += static_cast<double>(x[i]);
  return s;
}

template <class T>
double sqdist(const T* a, const T* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return s;
}

} // namespace cssl::kernels::detail::ref
