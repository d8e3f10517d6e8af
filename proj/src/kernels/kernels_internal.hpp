#pragma once

#include <cstddef>

namespace phrasecomp::kernels::detail {

struct KernelTable {
  double (*dot)(const double* x, const double* y, std::size_t n);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
};

extern const KernelTable kScalarTable;

#if defined(PHRASECOMP_HAVE_AVX2)
extern const KernelTable kAvx2Table;
#endif

}  // namespace phrasecomp::kernels::detail
