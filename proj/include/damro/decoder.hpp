#pragma once

// Outlier-contrastive generation loop.
//
// Per step the decoder runs two branches over the same text prefix: the full
// visual context and a negative context holding only the k patch tokens the
// encoder's CLS query attends to most. The next-token distribution is
//
//   p_t = softmax((1 + alpha) * full_logits - alpha * negative_logits)
//
// restricted to the tokens whose full-branch probability is at least
// beta * max full-branch probability, renormalized, and sampled by inverse CDF.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "damro/attention_tap.hpp"
#include "damro/lvlm.hpp"
#include "damro/rng.hpp"
#include "json.hpp"

namespace damro::decode {

using lvlm::TokenId;

struct DecodeConfig {
  double alpha = 0.5;
  double beta = 0.1;
  std::size_t k = 0;  // outlier count; 0 picks tap::default_topk(n)
  std::uint64_t seed = 42;
  std::size_t max_new_tokens = 1024;
  bool keep_original_positions = true;
  // Restrict the full branch to the top-N CLS-attended tokens; 0 keeps all.
  std::size_t keep_only_count = 0;

  void validate() const;
};

nlohmann::json to_json(const DecodeConfig& config);

enum class TaskStyle { caption, short_answer };

// 0.5 / 2.0 for 576-token style encoders, 1.5 / 0.5 for 256-token ones. Other
// grid sizes use the 576-token values.
double default_alpha(std::size_t n, TaskStyle style);

// softmax((1 + alpha) * full - alpha * negative)
std::vector<double> contrastive_distribution(std::span<const double> full_logits,
                                             std::span<const double> negative_logits, double alpha);

// Indices y with original[y] >= beta * max(original). Never empty.
std::vector<std::size_t> plausible_set(std::span<const double> original_probs, double beta);

// Zero `candidate_probs` outside plausible_set(original_probs, beta) and
// renormalize.
std::vector<double> plausibility_filter(std::span<const double> original_probs,
                                        std::span<const double> candidate_probs, double beta);

// Inverse-CDF draw using one rng.uniform(). Never returns a zero-probability id.
TokenId sample_token(std::span<const double> dist, Rng& rng);

struct GenerationStep {
  std::vector<double> full_logits;
  std::vector<double> negative_logits;  // empty for the baseline loop
  std::vector<double> contrastive;      // p_t before the plausibility mask
  std::vector<std::size_t> head;        // plausibility survivors
  std::vector<double> sampling;         // distribution actually sampled
  std::vector<double> decoder_attention;  // full-branch aggregate over image tokens
  TokenId token = 0;
};

struct GenerationTrace {
  bool contrastive = true;
  DecodeConfig config;        // with k resolved
  tap::OutlierSet outliers;   // empty for the baseline loop
  lvlm::AttentionRecord encoder_attention;
  std::vector<std::size_t> full_positions;  // image positions seen by the full branch
  std::vector<GenerationStep> steps;
  bool stopped_by_eos = false;
};

struct GenerationResult {
  std::vector<TokenId> tokens;
  GenerationTrace trace;
};

// Outlier-contrastive generation.
GenerationResult damro_generate(const lvlm::ModelHandle& model, const lvlm::ImageInput& image,
                                const lvlm::PromptTokens& prompt, const DecodeConfig& config);

// Same loop, sampler and plausibility mask, without the negative branch.
// alpha is ignored.
GenerationResult baseline_generate(const lvlm::ModelHandle& model, const lvlm::ImageInput& image,
                                   const lvlm::PromptTokens& prompt, const DecodeConfig& config);

nlohmann::json to_json(const GenerationTrace& trace, std::span<const TokenId> tokens);

}  // namespace damro::decode
