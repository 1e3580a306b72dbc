#include "cssl/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "kernel_table.hpp"

namespace cssl::kernels {

namespace {

using detail::KernelTable;

const KernelTable* table_for(Backend b) {
  switch (b) {
    case Backend::scalar:
      return &detail::scalar::table;
    case Backend::avx2:
#if defined(CSSL_HAVE_AVX2_BACKEND)
      if (__builtin_cpu_supports("avx2")) return &detail::avx2::table;
#endif
      return nullptr;
    case Backend::neon:
#if defined(CSSL_HAVE_NEON_BACKEND)
      return &detail::neon::table;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Backend detect() {
  if (const char* env = std::getenv("CSSL_KERNELS")) {
    const std::string want(env);
    if (want == "scalar") return Backend::scalar;
    if (want == "avx2" && table_for(Backend::avx2)) return Backend::avx2;
    if (want == "neon" && table_for(Backend::neon)) return Backend::neon;
    // unknown or unsupported value: fall through to detection
  }
  if (table_for(Backend::avx2)) return Backend::avx2;
  if (table_for(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

struct Active {
  std::atomic<const KernelTable*> table;
  std::atomic<Backend> backend;
  Active() {
    const Backend b = detect();
    backend.store(b, std::memory_order_relaxed);
    table.store(table_for(b), std::memory_order_relaxed);
  }
};

Active& active() {
  static Active a;
  return a;
}

const KernelTable& tab() {
  return *active().table.load(std::memory_order_relaxed);
}

} // namespace

const char* backend_name(Backend b) {
  switch (b) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "?";
}

bool backend_supported(Backend b) { return table_for(b) != nullptr; }

std::vector<Backend> supported_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon})
    if (backend_supported(b)) out.push_back(b);
  return out;
}

Backend active_backend() {
  return active().backend.load(std::memory_order_relaxed);
}

void set_backend(Backend b) {
  const KernelTable* t = table_for(b);
  if (!t)
    throw std::runtime_error(std::string("kernel backend not supported: ") +
                             backend_name(b));
  active().backend.store(b, std::memory_order_relaxed);
  active().table.store(t, std::memory_order_relaxed);
}

void set_backend(const std::string& name) {
  if (name == "auto") {
    reset_backend();
    return;
  }
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
    if (name == backend_name(b)) {
      set_backend(b);
      return;
    }
  }
  throw std::runtime_error("unknown kernel backend: " + name);
}

void reset_backend() { set_backend(detect()); }

void gemm_nn(const float* a, const float* b, float* c, int m, int k, int n,
             bool accumulate) {
  tab().gemm_nn(a, b, c, m, k, n, accumulate);
}
void gemm_nt(const float* a, const float* b, float* c, int m, int k, int n,
             bool accumulate) {
  tab().gemm_nt(a, b, c, m, k, n, accumulate);
}
void gemm_tn(const float* a, const float* b, float* c, int m, int k, int n,
             bool accumulate) {
  tab().gemm_tn(a, b, c, m, k, n, accumulate);
}
void bias_add_rows(float* x, const float* bias, int rows, int cols) {
  tab().bias_add_rows(x, bias, rows, cols);
}
void bias_add_cols(float* x, const float* bias, int rows, int cols) {
  tab().bias_add_cols(x, bias, rows, cols);
}
void reduce_rows(const float* x, float* out, int rows, int cols) {
  tab().reduce_rows(x, out, rows, cols);
}
void reduce_cols(const float* x, float* out, int rows, int cols) {
  tab().reduce_cols(x, out, rows, cols);
}
void relu(float* x, std::size_t n) { tab().relu(x, n); }
void relu_mask_backward(const float* y, float* dy, std::size_t n) {
  tab().relu_mask_backward(y, dy, n);
}
void adam_step(float* p, const float* g, float* m, float* v, std::size_t n,
               float lr, float beta1, float beta2, float eps, float inv_bc1,
               float inv_bc2) {
  tab().adam_step(p, g, m, v, n, lr, beta1, beta2, eps, inv_bc1, inv_bc2);
}
void scale_shift(const float* x, float* y, std::size_t n, float scale,
                 float shift) {
  tab().scale_shift(x, y, n, scale, shift);
}
void moments(const float* x, std::size_t n, double* mean, double* var) {
  tab().moments(x, n, mean, var);
}
double sum(const float* x, std::size_t n) { return tab().sum(x, n); }
double sqdist(const float* a, const float* b, std::size_t n) {
  return tab().sqdist(a, b, n);
}

} // namespace cssl::kernels
