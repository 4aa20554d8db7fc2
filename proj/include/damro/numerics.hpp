#pragma once

#include <span>
#include <vector>

namespace damro {

// Max-subtracted softmax. Finite input gives finite output summing to 1.
std::vector<double> softmax(std::span<const double> logits);
void softmax_inplace(std::span<double> values);

bool all_finite(std::span<const double> values) noexcept;

// Throws InputError unless values are finite, nonnegative and sum to 1
// within tol. `what` prefixes the message.
void check_distribution(std::span<const double> values, double tol, const char* what);

}  // namespace damro
