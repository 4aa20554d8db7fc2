#pragma once

// Double-precision inner-loop kernels used by the toy model and the decoder.
//
// Every kernel has a scalar reference implementation. On x86-64 an AVX2/FMA
// variant is compiled in a separate translation unit and picked at runtime
// when the CPU supports it. The two variants agree to rounding (different
// summation order), not bitwise; within one process the selected table is
// fixed so all forward passes stay bitwise reproducible.
//
// DAMRO_KERNELS=scalar|avx2 overrides the automatic choice.

#include <cstddef>
#include <span>
#include <string_view>

namespace damro::kernels {

struct KernelTable {
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[i] = a * x[i] + b * y[i]
  void (*axpby)(double a, const double* x, double b, const double* y, double* out, std::size_t n);
  // x[i] *= s
  void (*scale)(double s, double* x, std::size_t n);
  double (*reduce_max)(const double* x, std::size_t n);
  double (*reduce_sum)(const double* x, std::size_t n);
  // out[r] = dot(w + r * cols, x, cols) for r < rows; w is row-major.
  void (*matvec)(const double* w, const double* x, double* out, std::size_t rows, std::size_t cols);
};

const KernelTable& scalar_table() noexcept;

// nullptr when the AVX2 variant is not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table() noexcept;

// The table selected for this process (environment override, then CPU).
const KernelTable& active() noexcept;

// Pin the active table; used by equivalence tests. Not thread-safe with
// respect to concurrent forward passes.
void set_active(const KernelTable& table) noexcept;

// Convenience wrappers over active().
inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), y.size());
}

}  // namespace damro::kernels
