#include "damro/decoder.hpp"

namespace damro::decode {

nlohmann::json to_json(const GenerationTrace& trace, std::span<const TokenId> tokens) {
  nlohmann::json steps = nlohmann::json::array();
  for (std::size_t t = 0; t < trace.steps.size(); ++t) {
    const GenerationStep& s = trace.steps[t];
    steps.push_back({
        {"step", t},
        {"token", s.token},
        {"full_logits", s.full_logits},
        {"negative_logits", trace.contrastive ? nlohmann::json(s.negative_logits) : nlohmann::json(nullptr)},
        {"contrastive", s.contrastive},
        {"head", s.head},
        {"sampling", s.sampling},
        {"decoder_attention", s.decoder_attention},
    });
  }
  return {
      {"mode", trace.contrastive ? "damro" : "baseline"},
      {"config", to_json(trace.config)},
      {"outliers", tap::to_json(trace.outliers)},
      {"full_positions", trace.full_positions},
      {"encoder_attention", lvlm::to_json(trace.encoder_attention)},
      {"tokens", std::vector<TokenId>(tokens.begin(), tokens.end())},
      {"stopped_by", trace.stopped_by_eos ? "eos" : "max_new_tokens"},
      {"steps", std::move(steps)},
  };
}

}  // namespace damro::decode
