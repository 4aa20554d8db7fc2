#include <cmath>
#include <limits>
#include <string>

#include "damro/decoder.hpp"
#include "damro/errors.hpp"
#include "damro/kernels.hpp"
#include "damro/numerics.hpp"

namespace damro::decode {

void DecodeConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha", "must be a finite number >= 0");
  if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta", "must be in [0, 1]");
  if (max_new_tokens == 0) throw ConfigError("max_new_tokens", "must be positive");
}

nlohmann::json to_json(const DecodeConfig& c) {
  return {
      {"alpha", c.alpha},
      {"beta", c.beta},
      {"k", c.k},
      {"seed", c.seed},
      {"max_new_tokens", c.max_new_tokens},
      {"keep_original_positions", c.keep_original_positions},
      {"keep_only_count", c.keep_only_count},
  };
}

double default_alpha(std::size_t n, TaskStyle style) {
  if (n == 256) return style == TaskStyle::caption ? 1.5 : 0.5;
  return style == TaskStyle::caption ? 0.5 : 2.0;
}

namespace {

// softmax over `head` only; everything else is exactly 0.
std::vector<double> masked_softmax(std::span<const double> logits, std::span<const std::size_t> head) {
  std::vector<double> picked(head.size());
  for (std::size_t j = 0; j < head.size(); ++j) picked[j] = logits[head[j]];
  softmax_inplace(picked);
  std::vector<double> out(logits.size(), 0.0);
  for (std::size_t j = 0; j < head.size(); ++j) out[head[j]] = picked[j];
  return out;
}

GenerationResult run(const lvlm::ModelHandle& model, const lvlm::ImageInput& image, const lvlm::PromptTokens& prompt,
                     const DecodeConfig& requested, bool contrastive) {
  if (!model) throw InputError("generate: null model");
  requested.validate();
  const auto& mc = model->config();
  for (TokenId id : prompt.ids)
    if (id >= mc.vocab_size) throw InputError("prompt id " + std::to_string(id) + " outside vocabulary");

  const std::size_t n = mc.num_patches();
  DecodeConfig config = requested;
  if (config.k == 0) config.k = tap::default_topk(n);
  if (config.k > n) throw ConfigError("k", "outlier count exceeds the " + std::to_string(n) + "-token grid");
  if (config.keep_only_count > n) throw ConfigError("keep_only_count", "exceeds the grid size");
  const auto mode = config.keep_original_positions ? lvlm::PositionMode::original : lvlm::PositionMode::compact;

  // Encoding and outlier selection do not depend on the step, so they run once.
  lvlm::EncodeResult enc = model->encode_image(image);
  const tap::ClsAttention cls{enc.cls_attention.aggregate, static_cast<double>(mc.head_dim())};

  GenerationResult result;
  GenerationTrace& trace = result.trace;
  trace.contrastive = contrastive;
  trace.config = config;

  lvlm::VisualTokenGrid full_visual =
      config.keep_only_count == 0 ? enc.visual
                                  : lvlm::keep_only(enc.visual, tap::top_positions(cls.weights, config.keep_only_count));
  trace.full_positions = full_visual.positions;

  lvlm::DecoderSession full = model->start_session(full_visual, mode);
  full.push(prompt.ids);

  std::optional<lvlm::DecoderSession> negative;
  if (contrastive) {
    trace.outliers = tap::select_outliers(cls, config.k);
    negative.emplace(model->start_session(lvlm::keep_only(enc.visual, trace.outliers.indices), mode));
    negative->push(prompt.ids);
  }
  trace.encoder_attention = std::move(enc.cls_attention);

  Rng rng(config.seed);
  for (std::size_t t = 0; t < config.max_new_tokens; ++t) {
    GenerationStep step;
    lvlm::StepResult cur = full.current(t);
    step.full_logits = std::move(cur.logits);
    step.decoder_attention = std::move(cur.attention.aggregate);

    std::vector<double> combined;
    if (contrastive) {
      step.negative_logits.assign(negative->logits().begin(), negative->logits().end());
      combined.resize(step.full_logits.size());
      const double a = config.alpha;
      kernels::active().axpby(1.0 + a, step.full_logits.data(), -a, step.negative_logits.data(), combined.data(),
                              combined.size());
    } else {
      combined = step.full_logits;
    }
    step.contrastive = softmax(combined);
    step.head = plausible_set(softmax(step.full_logits), config.beta);
    step.sampling = masked_softmax(combined, step.head);
    step.token = sample_token(step.sampling, rng);

    const TokenId token = step.token;
    trace.steps.push_back(std::move(step));
    result.tokens.push_back(token);
    if (token == mc.eos_id()) {
      trace.stopped_by_eos = true;
      break;
    }
    if (t + 1 < config.max_new_tokens) {
      full.push(token);
      if (negative) negative->push(token);
    }
  }
  return result;
}

}  // namespace

GenerationResult damro_generate(const lvlm::ModelHandle& model, const lvlm::ImageInput& image,
                                const lvlm::PromptTokens& prompt, const DecodeConfig& config) {
  return run(model, image, prompt, config, true);
}

GenerationResult baseline_generate(const lvlm::ModelHandle& model, const lvlm::ImageInput& image,
                                   const lvlm::PromptTokens& prompt, const DecodeConfig& config) {
  return run(model, image, prompt, config, false);
}

}  // namespace damro::decode
