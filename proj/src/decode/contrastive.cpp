#include <algorithm>
#include <cmath>
#include <string>

#include "damro/decoder.hpp"
#include "damro/errors.hpp"
#include "damro/kernels.hpp"
#include "damro/numerics.hpp"

namespace damro::decode {

namespace {
constexpr double kDistTol = 1e-6;
}

std::vector<double> contrastive_distribution(std::span<const double> full_logits,
                                             std::span<const double> negative_logits, double alpha) {
  if (full_logits.size() != negative_logits.size())
    throw InputError("contrastive_distribution: length mismatch (" + std::to_string(full_logits.size()) + " vs " +
                     std::to_string(negative_logits.size()) + ")");
  if (full_logits.empty()) throw InputError("contrastive_distribution: empty logits");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw InputError("contrastive_distribution: alpha must be >= 0");
  if (!all_finite(full_logits) || !all_finite(negative_logits))
    throw InputError("contrastive_distribution: non-finite logit");
  std::vector<double> combined(full_logits.size());
  kernels::active().axpby(1.0 + alpha, full_logits.data(), -alpha, negative_logits.data(), combined.data(),
                          combined.size());
  softmax_inplace(combined);
  return combined;
}

std::vector<std::size_t> plausible_set(std::span<const double> original_probs, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw InputError("plausibility: beta must be in [0, 1]");
  if (original_probs.empty()) throw InputError("plausibility: empty distribution");
  const double top = *std::max_element(original_probs.begin(), original_probs.end());
  const double threshold = beta * top;
  std::vector<std::size_t> head;
  for (std::size_t i = 0; i < original_probs.size(); ++i)
    if (original_probs[i] >= threshold) head.push_back(i);
  return head;
}

std::vector<double> plausibility_filter(std::span<const double> original_probs,
                                        std::span<const double> candidate_probs, double beta) {
  if (original_probs.size() != candidate_probs.size()) throw InputError("plausibility_filter: length mismatch");
  check_distribution(original_probs, kDistTol, "plausibility_filter original");
  check_distribution(candidate_probs, kDistTol, "plausibility_filter candidate");
  const auto head = plausible_set(original_probs, beta);
  std::vector<double> out(candidate_probs.size(), 0.0);
  double mass = 0.0;
  for (std::size_t i : head) {
    out[i] = candidate_probs[i];
    mass += candidate_probs[i];
  }
  if (!(mass > 0.0)) throw InputError("plausibility_filter: candidate has no mass on the plausible set");
  for (std::size_t i : head) out[i] /= mass;
  return out;
}

TokenId sample_token(std::span<const double> dist, Rng& rng) {
  check_distribution(dist, kDistTol, "sample_token");
  double total = 0.0;
  std::size_t last_nonzero = dist.size();
  for (std::size_t i = 0; i < dist.size(); ++i) {
    total += dist[i];
    if (dist[i] > 0.0) last_nonzero = i;
  }
  if (last_nonzero == dist.size()) throw InputError("sample_token: degenerate all-zero distribution");
  const double target = rng.uniform() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    cum += dist[i];
    if (target < cum) return static_cast<TokenId>(i);
  }
  return static_cast<TokenId>(last_nonzero);
}

}  // namespace damro::decode
