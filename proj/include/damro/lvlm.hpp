#pragma once

// Toy vision-language model: ViT-style encoder with a CLS token, a two-layer
// MLP projector, and a causal decoder that reads projected patch tokens
// followed by text tokens. Weights are seeded Gaussians; every attention
// distribution the model computes can be observed.

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "damro/matrix.hpp"
#include "json.hpp"

namespace damro::lvlm {

using TokenId = std::uint32_t;

enum class EncoderAggregation { mean_heads, max_heads };
enum class DecoderAggregation { mean_layers_heads, last_layer_mean_heads };

// Positional encodings for a subset grid: the original patch index, or the
// rank within the subset.
enum class PositionMode { original, compact };

struct ModelConfig {
  std::size_t patch_grid_side = 8;
  std::size_t patch_dim = 12;
  std::size_t embed_dim = 32;
  std::size_t num_heads = 4;
  std::size_t encoder_layers = 2;
  std::size_t decoder_layers = 2;
  std::size_t vocab_size = 64;  // the last id is EOS
  std::uint64_t weight_seed = 42;
  // Multiplies the query projection's init scale; larger values give
  // peakier attention maps.
  double attention_sharpness = 3.0;
  // Standard deviation of the output logits at init, roughly.
  double logit_scale = 3.0;
  EncoderAggregation encoder_aggregation = EncoderAggregation::mean_heads;
  DecoderAggregation decoder_aggregation = DecoderAggregation::mean_layers_heads;

  std::size_t num_patches() const noexcept { return patch_grid_side * patch_grid_side; }
  std::size_t head_dim() const noexcept { return embed_dim / num_heads; }
  TokenId eos_id() const noexcept { return static_cast<TokenId>(vocab_size - 1); }

  // Throws ConfigError naming the first invalid field.
  void validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

ModelConfig model_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ModelConfig& config);
ModelConfig load_model_config(const std::filesystem::path& path);

// Row-major patches, num_patches() x patch_dim, values in [0, 1].
struct ImageInput {
  std::vector<double> pixels;
};

ImageInput image_from_json(const nlohmann::json& doc, const ModelConfig& config);
nlohmann::json to_json(const ImageInput& image, const ModelConfig& config);

struct VisualTokenGrid {
  Matrix tokens;                       // one row per kept patch token
  std::vector<double> cls_state;       // final CLS hidden state
  std::vector<std::size_t> positions;  // original patch index per row, ascending
  std::size_t grid_size = 0;           // n of the full grid

  std::size_t size() const noexcept { return positions.size(); }
  friend bool operator==(const VisualTokenGrid&, const VisualTokenGrid&) = default;
};

// Subset of `visual` at the given original positions, in ascending order.
// Positions keep their original patch indices.
VisualTokenGrid keep_only(const VisualTokenGrid& visual, std::span<const std::size_t> indices);

struct PromptTokens {
  std::vector<TokenId> ids;
};

PromptTokens parse_prompt_ids(const std::string& csv);

enum class AttentionSource { encoder_cls, decoder_step };

struct AttentionRow {
  std::size_t layer = 0;
  std::size_t head = 0;
  std::vector<double> weights;  // over `positions`, sums to 1
  // Share of the raw row that fell on image tokens before renormalization.
  // Always 1 for encoder CLS rows.
  double image_mass = 1.0;
};

struct AttentionRecord {
  AttentionSource source = AttentionSource::encoder_cls;
  std::size_t step_index = 0;
  std::vector<std::size_t> positions;  // original patch index of each weight
  std::vector<AttentionRow> rows;
  std::vector<double> aggregate;
};

nlohmann::json to_json(const AttentionRecord& record);

struct EncodeResult {
  VisualTokenGrid visual;
  AttentionRecord cls_attention;
};

struct StepResult {
  std::vector<double> logits;
  AttentionRecord attention;
};

struct Weights;
class Model;
using ModelHandle = std::shared_ptr<const Model>;

// Incremental decoder state for one visual context. Feeding the same token
// stream always reproduces the same logits bitwise, whether the stream is fed
// through one session or rebuilt from scratch.
class DecoderSession {
 public:
  DecoderSession(ModelHandle model, const VisualTokenGrid& visual, PositionMode mode);

  void push(TokenId id);
  void push(std::span<const TokenId> ids);

  // Logits and image attention for the most recently fed position.
  StepResult current(std::size_t step_index = 0) const;
  std::span<const double> logits() const noexcept { return last_logits_; }

  std::size_t length() const noexcept { return length_; }

 private:
  void forward_position(std::span<const double> embedding, std::size_t position);

  ModelHandle model_;
  std::vector<std::size_t> image_positions_;
  std::size_t image_count_ = 0;
  std::size_t text_base_ = 0;
  std::size_t text_count_ = 0;
  std::size_t length_ = 0;
  std::vector<Matrix> keys_;    // per layer, one row per position
  std::vector<Matrix> values_;  // per layer
  std::vector<double> last_logits_;
  std::vector<std::vector<double>> last_attention_;  // [layer * heads + head][position]
};

class Model : public std::enable_shared_from_this<Model> {
 public:
  static ModelHandle build(const ModelConfig& config);

  const ModelConfig& config() const noexcept { return config_; }

  // 16 lowercase hex digits (FNV-1a 64 over the little-endian bytes).
  std::string weight_checksum() const;
  std::string first_layer_checksum() const;

  EncodeResult encode_image(const ImageInput& image) const;

  StepResult decode_step(const VisualTokenGrid& visual, const PromptTokens& prompt,
                         std::span<const TokenId> generated,
                         PositionMode mode = PositionMode::original) const;

  DecoderSession start_session(const VisualTokenGrid& visual, PositionMode mode = PositionMode::original) const;

  // Copy of this model with an additive bias on the output logits.
  ModelHandle with_output_bias(std::vector<double> bias) const;

  std::uint64_t encoder_invocations() const noexcept { return encoder_calls_.load(); }

  const Weights& weights() const noexcept { return *weights_; }

  Model(ModelConfig config, std::shared_ptr<const Weights> weights);

 private:
  ModelConfig config_;
  std::shared_ptr<const Weights> weights_;
  mutable std::atomic<std::uint64_t> encoder_calls_{0};
};

inline ModelHandle build_model(const ModelConfig& config) { return Model::build(config); }

}  // namespace damro::lvlm
