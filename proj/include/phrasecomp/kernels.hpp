#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision inner loops used by composition, training and
// ranking. Every kernel has a scalar reference implementation; on x86-64
// an AVX2/FMA variant is selected at startup when the CPU supports it.
// Setting PHRASECOMP_KERNELS=scalar in the environment forces the
// reference path.
//
// Variants agree to rounding, not bitwise: the vector dot product keeps four
// partial sums. Results are deterministic for a fixed backend.
namespace phrasecomp::kernels {

enum class Backend { kScalar, kAvx2 };

std::string_view backend_name(Backend backend);
bool backend_available(Backend backend);
Backend best_available_backend();
Backend active_backend();

// Throws InvalidArgument if the backend is not compiled in or not supported
// by this CPU.
void set_backend(Backend backend);

// RAII override of the active backend, restored on scope exit.
class ScopedBackend {
 public:
  explicit ScopedBackend(Backend backend) : previous_(active_backend()) {
    set_backend(backend);
  }
  ~ScopedBackend() { set_backend(previous_); }
  ScopedBackend(const ScopedBackend&) = delete;
  ScopedBackend& operator=(const ScopedBackend&) = delete;

 private:
  Backend previous_;
};

double dot(std::span<const double> x, std::span<const double> y);

// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// y += A x, with A row-major [rows x cols].
void gemv(std::span<const double> a, std::size_t rows, std::size_t cols,
          std::span<const double> x, std::span<double> y);

// y += A^T x, with A row-major [rows x cols]; x has rows entries, y cols.
void gemv_transposed(std::span<const double> a, std::size_t rows,
                     std::size_t cols, std::span<const double> x,
                     std::span<double> y);

// A += alpha * x y^T, with A row-major [x.size() x y.size()].
void rank1_update(double alpha, std::span<const double> x,
                  std::span<const double> y, std::span<double> a);

}  // namespace phrasecomp::kernels
