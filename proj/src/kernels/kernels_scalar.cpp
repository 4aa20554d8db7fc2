#include "damro/kernels.hpp"

#include <limits>

namespace damro::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void axpby_scalar(double a, const double* x, double b, const double* y, double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = a * x[i] + b * y[i];
}

void scale_scalar(double s, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

double reduce_max_scalar(const double* x, std::size_t n) {
  double m = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] > m) m = x[i];
  return m;
}

double reduce_sum_scalar(const double* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i];
  return acc;
}

void matvec_scalar(const double* w, const double* x, double* out, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = dot_scalar(w + r * cols, x, cols);
}

}  // namespace

const KernelTable& scalar_table() noexcept {
  static const KernelTable table{
      "scalar",     dot_scalar,        axpy_scalar,       axpby_scalar,
      scale_scalar, reduce_max_scalar, reduce_sum_scalar, matvec_scalar,
  };
  return table;
}

}  // namespace damro::kernels
