#include <cmath>
#include <string>

#include "damro/errors.hpp"
#include "damro/json_io.hpp"
#include "damro/lvlm.hpp"

namespace damro::lvlm {

void ModelConfig::validate() const {
  if (patch_grid_side == 0) throw ConfigError("patch_grid_side", "must be positive");
  if (patch_dim == 0) throw ConfigError("patch_dim", "must be positive");
  if (embed_dim == 0) throw ConfigError("embed_dim", "must be positive");
  if (num_heads == 0) throw ConfigError("num_heads", "must be positive");
  if (embed_dim % num_heads != 0)
    throw ConfigError("embed_dim", "embed_dim not divisible by num_heads (" + std::to_string(embed_dim) + " % " +
                                       std::to_string(num_heads) + " != 0)");
  if (encoder_layers == 0) throw ConfigError("encoder_layers", "must be positive");
  if (decoder_layers == 0) throw ConfigError("decoder_layers", "must be positive");
  if (vocab_size < 2) throw ConfigError("vocab_size", "must be at least 2 (one id is reserved for EOS)");
  if (!(attention_sharpness > 0.0) || !std::isfinite(attention_sharpness))
    throw ConfigError("attention_sharpness", "must be positive and finite");
  if (!(logit_scale > 0.0) || !std::isfinite(logit_scale))
    throw ConfigError("logit_scale", "must be positive and finite");
}

namespace {

const char* name(EncoderAggregation a) {
  switch (a) {
    case EncoderAggregation::mean_heads: return "mean_heads";
    case EncoderAggregation::max_heads: return "max_heads";
  }
  return "?";
}

const char* name(DecoderAggregation a) {
  switch (a) {
    case DecoderAggregation::mean_layers_heads: return "mean_layers_heads";
    case DecoderAggregation::last_layer_mean_heads: return "last_layer_mean_heads";
  }
  return "?";
}

template <typename T>
void read_count(const nlohmann::json& doc, const char* field, T& out) {
  auto it = doc.find(field);
  if (it == doc.end()) return;
  if (!it->is_number_integer() || it->get<long long>() < 0)
    throw ConfigError(field, "expected a nonnegative integer");
  out = it->get<T>();
}

void read_real(const nlohmann::json& doc, const char* field, double& out) {
  auto it = doc.find(field);
  if (it == doc.end()) return;
  if (!it->is_number()) throw ConfigError(field, "expected a number");
  out = it->get<double>();
}

}  // namespace

ModelConfig model_config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("model_config", "expected a JSON object");
  static const char* known[] = {"patch_grid_side", "patch_dim",       "embed_dim",           "num_heads",
                                "encoder_layers",  "decoder_layers",  "vocab_size",          "weight_seed",
                                "attention_sharpness", "logit_scale", "encoder_aggregation", "decoder_aggregation"};
  for (const auto& [key, _] : doc.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(key, "unknown model config field");
  }

  ModelConfig c;
  read_count(doc, "patch_grid_side", c.patch_grid_side);
  read_count(doc, "patch_dim", c.patch_dim);
  read_count(doc, "embed_dim", c.embed_dim);
  read_count(doc, "num_heads", c.num_heads);
  read_count(doc, "encoder_layers", c.encoder_layers);
  read_count(doc, "decoder_layers", c.decoder_layers);
  read_count(doc, "vocab_size", c.vocab_size);
  if (auto it = doc.find("weight_seed"); it != doc.end()) {
    if (!it->is_number_unsigned()) throw ConfigError("weight_seed", "expected an unsigned 64-bit integer");
    c.weight_seed = it->get<std::uint64_t>();
  }
  read_real(doc, "attention_sharpness", c.attention_sharpness);
  read_real(doc, "logit_scale", c.logit_scale);
  if (auto it = doc.find("encoder_aggregation"); it != doc.end()) {
    const auto v = it->is_string() ? it->get<std::string>() : std::string{};
    if (v == "mean_heads") c.encoder_aggregation = EncoderAggregation::mean_heads;
    else if (v == "max_heads") c.encoder_aggregation = EncoderAggregation::max_heads;
    else throw ConfigError("encoder_aggregation", "expected \"mean_heads\" or \"max_heads\"");
  }
  if (auto it = doc.find("decoder_aggregation"); it != doc.end()) {
    const auto v = it->is_string() ? it->get<std::string>() : std::string{};
    if (v == "mean_layers_heads") c.decoder_aggregation = DecoderAggregation::mean_layers_heads;
    else if (v == "last_layer_mean_heads") c.decoder_aggregation = DecoderAggregation::last_layer_mean_heads;
    else throw ConfigError("decoder_aggregation", "expected \"mean_layers_heads\" or \"last_layer_mean_heads\"");
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ModelConfig& c) {
  return {
      {"patch_grid_side", c.patch_grid_side},
      {"patch_dim", c.patch_dim},
      {"embed_dim", c.embed_dim},
      {"num_heads", c.num_heads},
      {"encoder_layers", c.encoder_layers},
      {"decoder_layers", c.decoder_layers},
      {"vocab_size", c.vocab_size},
      {"weight_seed", c.weight_seed},
      {"attention_sharpness", c.attention_sharpness},
      {"logit_scale", c.logit_scale},
      {"encoder_aggregation", name(c.encoder_aggregation)},
      {"decoder_aggregation", name(c.decoder_aggregation)},
  };
}

ModelConfig load_model_config(const std::filesystem::path& path) {
  return model_config_from_json(json_io::read_file(path));
}

}  // namespace damro::lvlm
