#include "kernels_internal.hpp"

namespace phrasecomp::kernels::detail {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += x[i] * y[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

const KernelTable kScalarTable{&dot_scalar, &axpy_scalar};

}  // namespace phrasecomp::kernels::detail
