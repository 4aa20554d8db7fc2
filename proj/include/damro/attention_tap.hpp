#pragma once

// CLS attention over patch tokens and top-k outlier selection.

#include <cstddef>
#include <span>
#include <vector>

#include "damro/matrix.hpp"
#include "json.hpp"

namespace damro::tap {

struct ClsAttention {
  std::vector<double> weights;  // over the n patch tokens, sums to 1
  double d = 1.0;               // scaling dimension used in the softmax
};

// Positions into the attention vector, descending by weight, ties resolved
// toward the lower position.
struct OutlierSet {
  std::vector<std::size_t> indices;
  std::size_t k = 0;

  friend bool operator==(const OutlierSet&, const OutlierSet&) = default;
};

// softmax(query . key_i / sqrt(d)) over the rows of `keys`.
ClsAttention cls_attention(std::span<const double> query, const Matrix& keys, double d);

// Same as above for already-computed scaled dot products.
ClsAttention cls_attention_from_scores(std::span<const double> scaled_scores, double d);

OutlierSet select_outliers(const ClsAttention& attn, std::size_t k);

// The i highest-weight positions of `weights`, ordered by descending weight
// then ascending position. Requires 1 <= i <= weights.size().
std::vector<std::size_t> top_positions(std::span<const double> weights, std::size_t i);

// Default outlier count for an n-token grid: 10 at 576 tokens, 4 at 256,
// otherwise round(10 * n / 576) clamped to [1, n].
std::size_t default_topk(std::size_t n);

nlohmann::json to_json(const OutlierSet& set);
OutlierSet outlier_set_from_json(const nlohmann::json& doc);

}  // namespace damro::tap
