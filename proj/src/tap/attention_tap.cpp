#include "damro/attention_tap.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "damro/errors.hpp"
#include "damro/kernels.hpp"
#include "damro/numerics.hpp"

namespace damro::tap {

ClsAttention cls_attention(std::span<const double> query, const Matrix& keys, double d) {
  if (!(d > 0.0) || !std::isfinite(d)) throw InputError("cls_attention: d must be positive");
  if (keys.rows() == 0) throw InputError("cls_attention: no keys");
  if (keys.cols() != query.size())
    throw InputError("cls_attention: dimension mismatch (query " + std::to_string(query.size()) + ", keys " +
                     std::to_string(keys.cols()) + ")");
  std::vector<double> scores(keys.rows());
  kernels::active().matvec(keys.flat().data(), query.data(), scores.data(), keys.rows(), keys.cols());
  const double inv = 1.0 / std::sqrt(d);
  for (double& s : scores) s *= inv;
  return cls_attention_from_scores(scores, d);
}

ClsAttention cls_attention_from_scores(std::span<const double> scaled_scores, double d) {
  if (scaled_scores.empty()) throw InputError("cls_attention: no keys");
  if (!all_finite(scaled_scores)) throw InputError("cls_attention: non-finite score");
  return ClsAttention{softmax(scaled_scores), d};
}

std::vector<std::size_t> top_positions(std::span<const double> weights, std::size_t i) {
  if (i < 1 || i > weights.size())
    throw InputError("top-i selection: i=" + std::to_string(i) + " outside [1, " + std::to_string(weights.size()) +
                     "]");
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto before = [&](std::size_t a, std::size_t b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return a < b;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(i), order.end(), before);
  order.resize(i);
  return order;
}

OutlierSet select_outliers(const ClsAttention& attn, std::size_t k) {
  if (k < 1 || k > attn.weights.size())
    throw InputError("select_outliers: k=" + std::to_string(k) + " outside [1, " +
                     std::to_string(attn.weights.size()) + "]");
  return OutlierSet{top_positions(attn.weights, k), k};
}

std::size_t default_topk(std::size_t n) {
  if (n == 576) return 10;
  if (n == 256) return 4;
  const auto scaled = static_cast<std::size_t>(std::llround(10.0 * static_cast<double>(n) / 576.0));
  return std::clamp<std::size_t>(scaled, 1, std::max<std::size_t>(n, 1));
}

nlohmann::json to_json(const OutlierSet& set) { return nlohmann::json(set.indices); }

OutlierSet outlier_set_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw InputError("outlier set: expected an array of integers");
  OutlierSet out;
  for (const auto& v : doc) {
    if (!v.is_number_unsigned()) throw InputError("outlier set: expected nonnegative integers");
    out.indices.push_back(v.get<std::size_t>());
  }
  out.k = out.indices.size();
  return out;
}

}  // namespace damro::tap
