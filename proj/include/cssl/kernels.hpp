#pragma once

// Data-parallel arithmetic kernels behind the trainer, transforms and
// retrieval code. Every operation has a scalar reference implementation;
// on x86-64 an AVX2 variant and on aarch64 a NEON variant are selected at
// runtime (overridable via set_backend() or the CSSL_KERNELS environment
// variable: "scalar", "avx2", "neon" or "auto").
//
// Accumulation-order contract: gemm_nn, gemm_tn and all elementwise ops
// produce bit-identical results across backends (same per-element mul/add
// sequence). Ops that reduce along the vectorized axis (gemm_nt,
// reduce_rows, sum, moments, sqdist) may differ by rounding only.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace cssl::kernels {

enum class Backend { scalar, avx2, neon };

const char* backend_name(Backend b);
bool backend_supported(Backend b);
std::vector<Backend> supported_backends();
Backend active_backend();
void set_backend(Backend b);          // throws std::runtime_error if unsupported
void set_backend(const std::string&); // "auto" re-runs detection
void reset_backend();                 // auto-detect again (honors CSSL_KERNELS)

// ---------------------------------------------------------------------------
// single precision (dispatched)
// ---------------------------------------------------------------------------

// c[m x n] = a[m x k] * b[k x n]            (+= when accumulate)
void gemm_nn(const float* a, const float* b, float* c, int m, int k, int n,
             bool accumulate = false);
// c[m x n] = a[m x k] * b[n x k]^T          (+= when accumulate)
void gemm_nt(const float* a, const float* b, float* c, int m, int k, int n,
             bool accumulate = false);
// c[m x n] = a[k x m]^T * b[k x n]          (+= when accumulate)
void gemm_tn(const float* a, const float* b, float* c, int m, int k, int n,
             bool accumulate = false);

void bias_add_rows(float* x, const float* bias, int rows, int cols); // x[r][c] += bias[r]
void bias_add_cols(float* x, const float* bias, int rows, int cols); // x[r][c] += bias[c]
void reduce_rows(const float* x, float* out, int rows, int cols);    // out[r] = sum_c x[r][c]
void reduce_cols(const float* x, float* out, int rows, int cols);    // out[c] = sum_r x[r][c]

void relu(float* x, std::size_t n);
// dy[i] = y[i] > 0 ? dy[i] : 0, where y is the relu output
void relu_mask_backward(const float* y, float* dy, std::size_t n);

// One Adam update. inv_bc1/inv_bc2 are the precomputed 1/(1-beta^t) factors.
void adam_step(float* p, const float* g, float* m, float* v, std::size_t n,
               float lr, float beta1, float beta2, float eps, float inv_bc1,
               float inv_bc2);

void scale_shift(const float* x, float* y, std::size_t n, float scale, float shift);

// Population mean/variance accumulated in double.
void moments(const float* x, std::size_t n, double* mean, double* var);
double sum(const float* x, std::size_t n);
double sqdist(const float* a, const float* b, std::size_t n);

// ---------------------------------------------------------------------------
// double precision (scalar reference only; used by high-precision checks and
// the double instantiation of the network templates)
// ---------------------------------------------------------------------------

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate = false);
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate = false);
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool accumulate = false);
void bias_add_rows(double* x, const double* bias, int rows, int cols);
void bias_add_cols(double* x, const double* bias, int rows, int cols);
void reduce_rows(const double* x, double* out, int rows, int cols);
void reduce_cols(const double* x, double* out, int rows, int cols);
void relu(double* x, std::size_t n);
void relu_mask_backward(const double* y, double* dy, std::size_t n);
void adam_step(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps,
               double inv_bc1, double inv_bc2);
void scale_shift(const double* x, double* y, std::size_t n, double scale,
                 double shift);
void moments(const double* x, std::size_t n, double* mean, double* var);
double sum(const double* x, std::size_t n);
double sqdist(const double* a, const double* b, std::size_t n);

} // namespace cssl::kernels
