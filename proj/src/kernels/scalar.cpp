#include "kernel_table.hpp"

#include "cssl/kernels.hpp"
#include "reference_impl.inl"

namespace cssl::kernels::detail::scalar {

using namespace cssl::kernels::detail::ref;

const KernelTable table = {
    &gemm_nn<float>,       &gemm_nt<float>,
    &gemm_tn<float>,       &bias_add_rows<float>,
    &bias_add_cols<float>, &reduce_rows<float>,
    &reduce_cols<float>,   &relu<float>,
    &relu_mask_backward<float>,
    &adam_step<float>,     &scale_shift<float>,
    &moments<float>,       &sum<float>,
    &sqdist<float>,
};

} // namespace cssl::kernels::detail::scalar

namespace cssl::kernels {

namespace ref = detail::ref;

void gemm_nn(const double* a, const double* b, double* c, int m, int k, int n,
             bool acc) {
  ref::gemm_nn(a, b, c, m, k, n, acc);
}
void gemm_nt(const double* a, const double* b, double* c, int m, int k, int n,
             bool acc) {
  ref::gemm_nt(a, b, c, m, k, n, acc);
}
void gemm_tn(const double* a, const double* b, double* c, int m, int k, int n,
             bool acc) {
  ref::gemm_tn(a, b, c, m, k, n, acc);
}
void bias_add_rows(double* x, const double* bias, int rows, int cols) {
  ref::bias_add_rows(x, bias, rows, cols);
}
void bias_add_cols(double* x, const double* bias, int rows, int cols) {
  ref::bias_add_cols(x, bias, rows, cols);
}
void reduce_rows(const double* x, double* out, int rows, int cols) {
  ref::reduce_rows(x, out, rows, cols);
}
void reduce_cols(const double* x, double* out, int rows, int cols) {
  ref::reduce_cols(x, out, rows, cols);
}
void relu(double* x, std::size_t n) { ref::relu(x, n); }
void relu_mask_backward(const double* y, double* dy, std::size_t n) {
  ref::relu_mask_backward(y, dy, n);
}
void adam_step(double* p, const double* g, double* m, double* v, std::size_t n,
               double lr, double beta1, double beta2, double eps,
               double inv_bc1, double inv_bc2) {
  ref::adam_step(p, g, m, v, n, lr, beta1, beta2, eps, inv_bc1, inv_bc2);
}
void scale_shift(const double* x, double* y, std::size_t n, double scale,
                 double shift) {
  ref::scale_shift(x, y, n, scale, shift);
}
void moments(const double* x, std::size_t n, double* mean, double* var) {
  ref::moments(x, n, mean, var);
}
double sum(const double* x, std::size_t n) { return ref::sum(x, n); }
double sqdist(const double* a, const double* b, std::size_t n) {
  return ref::sqdist(a, b, n);
}

} // namespace cssl::kernels
