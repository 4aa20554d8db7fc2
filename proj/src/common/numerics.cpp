#include "damro/numerics.hpp"

#include <cmath>
#include <string>

#include "damro/errors.hpp"
#include "damro/kernels.hpp"

namespace damro {

void softmax_inplace(std::span<double> values) {
  if (values.empty()) return;
  const auto& k = kernels::active();
  const double m = k.reduce_max(values.data(), values.size());
  for (double& v : values) v = std::exp(v - m);
  const double total = k.reduce_sum(values.data(), values.size());
  k.scale(1.0 / total, values.data(), values.size());
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.begin(), logits.end());
  softmax_inplace(out);
  return out;
}

bool all_finite(std::span<const double> values) noexcept {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

void check_distribution(std::span<const double> values, double tol, const char* what) {
  double total = 0.0;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw InputError(std::string(what) + ": entries must be finite and nonnegative");
    total += v;
  }
  if (std::abs(total - 1.0) > tol)
    throw InputError(std::string(what) + ": must sum to 1 (got " + std::to_string(total) + ")");
}

}  // namespace damro
