#pragma once

#include <cstddef>

namespace wcad {

// Deterministic GEMM kernels. Accumulation runs in double with the
// contraction index ascending; parallel splits never divide a single
// output element's reduction, so results are independent of thread count.

// c = a(MxK) * b(KxN), or += when add
void gemm_nn(const float* a, const float* b, float* c, int m, int n, int k, bool add = false);

// c(MxN, double) += a(MxK) * b(KxN)
void gemm_nn_acc(const float* a, const float* b, double* c, int m, int n, int k);

// c = a(KxM)^T * b(KxN), or += when add
void gemm_tn(const float* a, const float* b, float* c, int m, int n, int k, bool add = false);

// c = a(MxK) * b(NxK)^T, or += when add
void gemm_nt(const float* a, const float* b, float* c, int m, int n, int k, bool add = false);

}  // namespace wcad
