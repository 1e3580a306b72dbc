#pragma once

// Internal dispatch table shared by the backend implementations.

#include <cstddef>

namespace cssl::kernels::detail {

struct KernelTable {
  void (*gemm_nn)(const float*, const float*, float*, int, int, int, bool);
  void (*gemm_nt)(const float*, const float*, float*, int, int, int, bool);
  void (*gemm_tn)(const float*, const float*, float*, int, int, int, bool);
  void (*bias_add_rows)(float*, const float*, int, int);
  void (*bias_add_cols)(float*, const float*, int, int);
  void (*reduce_rows)(const float*, float*, int, int);
  void (*reduce_cols)(const float*, float*, int, int);
  void (*relu)(float*, std::size_t);
  void (*relu_mask_backward)(const float*, float*, std::size_t);
  void (*adam_step)(float*, const float*, float*, float*, std::size_t, float,
                    float, float, float, float, float);
  void (*scale_shift)(const float*, float*, std::size_t, float, float);
  void (*moments)(const float*, std::size_t, double*, double*);
  double (*sum)(const float*, std::size_t);
  double (*sqdist)(const float*, const float*, std::size_t);
};

namespace scalar {
extern const KernelTable table;
}

#if defined(__x86_64__) || defined(__i386__)
#define CSSL_HAVE_AVX2_BACKEND 1
namespace avx2 {
extern const KernelTable table;
}
#endif

#if defined(__aarch64__)
#define CSSL_HAVE_NEON_BACKEND 1
namespace neon {
extern const KernelTable table;
}
#endif

} // namespace cssl::kernels::detail
