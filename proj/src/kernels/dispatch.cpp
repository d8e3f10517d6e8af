#include <atomic>
#include <cstdlib>
#include <string>
#include <string_view>

#include "kernels_internal.hpp"
#include "phrasecomp/error.hpp"
#include "phrasecomp/kernels.hpp"

namespace phrasecomp::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(PHRASECOMP_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const detail::KernelTable* table_for(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return &detail::kScalarTable;
    case Backend::kAvx2:
#if defined(PHRASECOMP_HAVE_AVX2)
      return &detail::kAvx2Table;
#else
      return nullptr;
#endif
  }
  return nullptr;
}

Backend initial_backend() {
  if (const char* env = std::getenv("PHRASECOMP_KERNELS")) {
    if (std::string_view(env) == "scalar") return Backend::kScalar;
  }
  return best_available_backend();
}

struct ActiveState {
  std::atomic<Backend> backend{initial_backend()};
  std::atomic<const detail::KernelTable*> table{table_for(backend.load())};
};

ActiveState& state() {
  static ActiveState s;
  return s;
}

const detail::KernelTable& active() {
  return *state().table.load(std::memory_order_relaxed);
}

void check_same_size(std::size_t a, std::size_t b, const char* op) {
  if (a != b) {
    throw InvalidArgument(std::string(op) + ": length mismatch (" +
                          std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::kScalar:
      return "scalar";
    case Backend::kAvx2:
      return "avx2";
  }
  return "unknown";
}

bool backend_available(Backend backend) {
  if (backend == Backend::kScalar) return true;
  static const bool avx2 = cpu_has_avx2();
  return avx2 && table_for(backend) != nullptr;
}

Backend best_available_backend() {
  return backend_available(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar;
}

Backend active_backend() { return state().backend.load(); }

void set_backend(Backend backend) {
  if (!backend_available(backend)) {
    throw InvalidArgument("kernel backend '" + std::string(backend_name(backend)) +
                          "' is not available on this machine");
  }
  state().table.store(table_for(backend));
  state().backend.store(backend);
}

double dot(std::span<const double> x, std::span<const double> y) {
  check_same_size(x.size(), y.size(), "dot");
  return active().dot(x.data(), y.data(), x.size());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  check_same_size(x.size(), y.size(), "axpy");
  active().axpy(alpha, x.data(), y.data(), x.size());
}

void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y) {
  check_same_size(a.size(), rows * cols, "gemv");
  check_same_size(x.size(), cols, "gemv");
  check_same_size(y.size(), rows, "gemv");
  const auto& k = active();
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] += k.dot(a.data() + r * cols, x.data(), cols);
  }
}

void gemv_transposed(std::span<const double> a, std::size_t rows,
                     std::size_t cols, std::span<const double> x,
                     std::span<double> y) {
  check_same_size(a.size(), rows * cols, "gemv_transposed");
  check_same_size(x.size(), rows, "gemv_transposed");
  check_same_size(y.size(), cols, "gemv_transposed");
  const auto& k = active();
  for (std::size_t r = 0; r < rows; ++r) {
    if (x[r] != 0.0) k.axpy(x[r], a.data() + r * cols, y.data(), cols);
  }
}

void rank1_update(double alpha, std::span<const double> x,
                  std::span<const double> y, std::span<double> a) {
  check_same_size(a.size(), x.size() * y.size(), "rank1_update");
  const auto& k = active();
  const std::size_t cols = y.size();
  for (std::size_t r = 0; r < x.size(); ++r) {
    const double scale = alpha * x[r];
    if (scale != 0.0) k.axpy(scale, y.data(), a.data() + r * cols, cols);
  }
}

}  // namespace phrasecomp::kernels
