#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <string>

#include "damro/attention_tap.hpp"
#include "damro/errors.hpp"
#include "damro/kernels.hpp"
#include "damro/numerics.hpp"
#include "damro/rng.hpp"
#include "weights.hpp"

namespace damro::lvlm {

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kBiasStd = 0.02;

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  Matrix m(rows, cols);
  for (double& v : m.flat()) v = stddev * rng.gaussian();
  return m;
}

std::vector<double> gaussian_vector(Rng& rng, std::size_t n, double stddev) {
  std::vector<double> v(n);
  for (double& x : v) x = stddev * rng.gaussian();
  return v;
}

BlockWeights make_block(Rng& rng, const ModelConfig& c) {
  const std::size_t d = c.embed_dim;
  const std::size_t hidden = 2 * d;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  BlockWeights b;
  b.wq = gaussian_matrix(rng, d, d, c.attention_sharpness * s);
  b.wk = gaussian_matrix(rng, d, d, s);
  b.wv = gaussian_matrix(rng, d, d, s);
  b.wo = gaussian_matrix(rng, d, d, s);
  b.w1 = gaussian_matrix(rng, hidden, d, s);
  b.b1 = gaussian_vector(rng, hidden, kBiasStd);
  b.w2 = gaussian_matrix(rng, d, hidden, 1.0 / std::sqrt(static_cast<double>(hidden)));
  b.b2 = gaussian_vector(rng, d, kBiasStd);
  return b;
}

void layer_norm(std::span<const double> x, std::span<double> out) {
  const auto& k = kernels::active();
  const double n = static_cast<double>(x.size());
  const double mean = k.reduce_sum(x.data(), x.size()) / n;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - mean;
  const double var = k.dot(out.data(), out.data(), out.size()) / n;
  k.scale(1.0 / std::sqrt(var + kNormEps), out.data(), out.size());
}

double gelu(double x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2 / pi)
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

void add_position(std::span<double> x, std::size_t position) {
  const double p = static_cast<double>(position);
  const double d = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); i += 2) {
    const double freq = std::pow(10000.0, -static_cast<double>(i) / d);
    x[i] += std::sin(p * freq);
    if (i + 1 < x.size()) x[i + 1] += std::cos(p * freq);
  }
}

void linear(const Matrix& w, std::span<const double> x, std::span<const double> bias, std::span<double> out) {
  kernels::active().matvec(w.flat().data(), x.data(), out.data(), w.rows(), w.cols());
  for (std::size_t i = 0; i < bias.size(); ++i) out[i] += bias[i];
}

// x += W2 gelu(W1 LN(x) + b1) + b2
void mlp_residual(const BlockWeights& b, std::span<double> x) {
  std::vector<double> xn(x.size());
  layer_norm(x, xn);
  std::vector<double> h(b.w1.rows());
  linear(b.w1, xn, b.b1, h);
  for (double& v : h) v = gelu(v);
  std::vector<double> o(x.size());
  linear(b.w2, h, b.b2, o);
  kernels::active().axpy(1.0, o.data(), x.data(), x.size());
}

void hash_bytes(std::uint64_t& h, std::span<const double> values) {
  for (double v : values) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xffu;
      h *= 0x100000001b3ULL;
    }
  }
}

void hash_block(std::uint64_t& h, const BlockWeights& b) {
  for (const Matrix* m : {&b.wq, &b.wk, &b.wv, &b.wo, &b.w1}) hash_bytes(h, m->flat());
  hash_bytes(h, b.b1);
  hash_bytes(h, b.w2.flat());
  hash_bytes(h, b.b2);
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

}  // namespace

Weights generate_weights(const ModelConfig& c) {
  Rng rng(c.weight_seed);
  const std::size_t d = c.embed_dim;
  const double s = 1.0 / std::sqrt(static_cast<double>(d));
  Weights w;
  w.patch_embed = gaussian_matrix(rng, d, c.patch_dim, 1.0 / std::sqrt(static_cast<double>(c.patch_dim)));
  w.patch_bias = gaussian_vector(rng, d, kBiasStd);
  w.cls_token = gaussian_vector(rng, d, 1.0);
  for (std::size_t l = 0; l < c.encoder_layers; ++l) w.encoder.push_back(make_block(rng, c));
  w.proj1 = gaussian_matrix(rng, d, d, s);
  w.proj1_bias = gaussian_vector(rng, d, kBiasStd);
  w.proj2 = gaussian_matrix(rng, d, d, s);
  w.proj2_bias = gaussian_vector(rng, d, kBiasStd);
  w.token_embed = gaussian_matrix(rng, c.vocab_size, d, 1.0);
  for (std::size_t l = 0; l < c.decoder_layers; ++l) w.decoder.push_back(make_block(rng, c));
  w.lm_head = gaussian_matrix(rng, c.vocab_size, d, c.logit_scale * s);
  w.lm_bias.assign(c.vocab_size, 0.0);
  return w;
}

Model::Model(ModelConfig config, std::shared_ptr<const Weights> weights)
    : config_(std::move(config)), weights_(std::move(weights)) {}

ModelHandle Model::build(const ModelConfig& config) {
  config.validate();
  return std::make_shared<Model>(config, std::make_shared<const Weights>(generate_weights(config)));
}

ModelHandle Model::with_output_bias(std::vector<double> bias) const {
  if (bias.size() != config_.vocab_size) throw InputError("output bias: length must equal vocab_size");
  if (!all_finite(bias)) throw InputError("output bias: non-finite entry");
  auto w = std::make_shared<Weights>(*weights_);
  w->lm_bias = std::move(bias);
  return std::make_shared<Model>(config_, std::move(w));
}

std::string Model::weight_checksum() const {
  std::uint64_t h = kFnvOffset;
  const Weights& w = *weights_;
  hash_bytes(h, w.patch_embed.flat());
  hash_bytes(h, w.patch_bias);
  hash_bytes(h, w.cls_token);
  for (const auto& b : w.encoder) hash_block(h, b);
  hash_bytes(h, w.proj1.flat());
  hash_bytes(h, w.proj1_bias);
  hash_bytes(h, w.proj2.flat());
  hash_bytes(h, w.proj2_bias);
  hash_bytes(h, w.token_embed.flat());
  for (const auto& b : w.decoder) hash_block(h, b);
  hash_bytes(h, w.lm_head.flat());
  hash_bytes(h, w.lm_bias);
  return hex64(h);
}

std::string Model::first_layer_checksum() const {
  std::uint64_t h = kFnvOffset;
  hash_bytes(h, weights_->patch_embed.flat());
  hash_bytes(h, weights_->patch_bias);
  hash_bytes(h, weights_->cls_token);
  hash_block(h, weights_->encoder.front());
  return hex64(h);
}

EncodeResult Model::encode_image(const ImageInput& image) const {
  const ModelConfig& c = config_;
  const std::size_t n = c.num_patches();
  const std::size_t d = c.embed_dim;
  const std::size_t heads = c.num_heads;
  const std::size_t hd = c.head_dim();
  if (image.pixels.size() != n * c.patch_dim)
    throw InputError("encode_image: expected " + std::to_string(n * c.patch_dim) + " pixel values, got " +
                     std::to_string(image.pixels.size()));
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const double v = image.pixels[i];
    if (!std::isfinite(v)) throw InputError("encode_image: non-finite pixel at index " + std::to_string(i));
    if (v < 0.0 || v > 1.0) throw InputError("encode_image: pixel at index " + std::to_string(i) + " outside [0, 1]");
  }
  encoder_calls_.fetch_add(1, std::memory_order_relaxed);

  const auto& k = kernels::active();
  const Weights& w = *weights_;

  // Row 0 is CLS; row i + 1 is patch i.
  Matrix h(n + 1, d);
  std::copy(w.cls_token.begin(), w.cls_token.end(), h.row(0).begin());
  add_position(h.row(0), 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> patch(image.pixels.data() + i * c.patch_dim, c.patch_dim);
    linear(w.patch_embed, patch, w.patch_bias, h.row(i + 1));
    add_position(h.row(i + 1), i + 1);
  }

  AttentionRecord record;
  record.source = AttentionSource::encoder_cls;
  record.positions.resize(n);
  for (std::size_t i = 0; i < n; ++i) record.positions[i] = i;

  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));
  Matrix xn(n + 1, d), q(n + 1, d), kmat(n + 1, d), v(n + 1, d), attn_out(n + 1, d);
  std::vector<double> scores(n + 1), proj(d);

  for (std::size_t l = 0; l < w.encoder.size(); ++l) {
    const BlockWeights& b = w.encoder[l];
    for (std::size_t r = 0; r <= n; ++r) {
      layer_norm(h.row(r), xn.row(r));
      k.matvec(b.wq.flat().data(), xn.row(r).data(), q.row(r).data(), d, d);
      k.matvec(b.wk.flat().data(), xn.row(r).data(), kmat.row(r).data(), d, d);
      k.matvec(b.wv.flat().data(), xn.row(r).data(), v.row(r).data(), d, d);
    }
    std::fill(attn_out.flat().begin(), attn_out.flat().end(), 0.0);
    for (std::size_t head = 0; head < heads; ++head) {
      const std::size_t off = head * hd;
      for (std::size_t r = 0; r <= n; ++r) {
        for (std::size_t s = 0; s <= n; ++s)
          scores[s] = k.dot(q.row(r).data() + off, kmat.row(s).data() + off, hd) * inv_sqrt_hd;
        softmax_inplace(scores);
        for (std::size_t s = 0; s <= n; ++s) k.axpy(scores[s], v.row(s).data() + off, attn_out.row(r).data() + off, hd);
      }
      if (l + 1 == w.encoder.size()) {
        // CLS query against patch keys only.
        Matrix head_keys(n, hd);
        for (std::size_t s = 0; s < n; ++s)
          std::copy_n(kmat.row(s + 1).data() + off, hd, head_keys.row(s).data());
        auto cls = tap::cls_attention(q.row(0).subspan(off, hd), head_keys, static_cast<double>(hd));
        record.rows.push_back(AttentionRow{l, head, std::move(cls.weights), 1.0});
      }
    }
    for (std::size_t r = 0; r <= n; ++r) {
      k.matvec(b.wo.flat().data(), attn_out.row(r).data(), proj.data(), d, d);
      k.axpy(1.0, proj.data(), h.row(r).data(), d);
      mlp_residual(b, h.row(r));
    }
  }

  record.aggregate.assign(n, 0.0);
  if (c.encoder_aggregation == EncoderAggregation::mean_heads) {
    for (const auto& row : record.rows) k.axpy(1.0, row.weights.data(), record.aggregate.data(), n);
    k.scale(1.0 / static_cast<double>(record.rows.size()), record.aggregate.data(), n);
  } else {
    for (const auto& row : record.rows)
      for (std::size_t i = 0; i < n; ++i) record.aggregate[i] = std::max(record.aggregate[i], row.weights[i]);
    k.scale(1.0 / k.reduce_sum(record.aggregate.data(), n), record.aggregate.data(), n);
  }

  EncodeResult out;
  out.visual.grid_size = n;
  out.visual.tokens = Matrix(n, d);
  out.visual.positions = record.positions;
  out.visual.cls_state.resize(d);
  layer_norm(h.row(0), out.visual.cls_state);
  for (std::size_t i = 0; i < n; ++i) layer_norm(h.row(i + 1), out.visual.tokens.row(i));
  out.cls_attention = std::move(record);
  return out;
}

StepResult Model::decode_step(const VisualTokenGrid& visual, const PromptTokens& prompt,
                              std::span<const TokenId> generated, PositionMode mode) const {
  DecoderSession session(shared_from_this(), visual, mode);
  session.push(prompt.ids);
  session.push(generated);
  return session.current(generated.size());
}

DecoderSession Model::start_session(const VisualTokenGrid& visual, PositionMode mode) const {
  return DecoderSession(shared_from_this(), visual, mode);
}

// ---------------------------------------------------------------------------

DecoderSession::DecoderSession(ModelHandle model, const VisualTokenGrid& visual, PositionMode mode)
    : model_(std::move(model)) {
  const ModelConfig& c = model_->config();
  const Weights& w = model_->weights();
  const std::size_t d = c.embed_dim;
  if (visual.size() == 0) throw InputError("decoder: visual grid is empty");
  if (visual.tokens.rows() != visual.size() || visual.tokens.cols() != d)
    throw InputError("decoder: visual grid shape does not match the model");
  if (visual.grid_size != c.num_patches()) throw InputError("decoder: visual grid size does not match the model");
  for (std::size_t i = 0; i < visual.size(); ++i) {
    if (visual.positions[i] >= visual.grid_size || (i > 0 && visual.positions[i] <= visual.positions[i - 1]))
      throw InputError("decoder: visual positions must be ascending and inside the grid");
  }

  image_positions_ = visual.positions;
  image_count_ = visual.size();
  text_base_ = mode == PositionMode::original ? visual.grid_size : image_count_;
  keys_.assign(c.decoder_layers, Matrix(0, d));
  values_.assign(c.decoder_layers, Matrix(0, d));

  std::vector<double> hidden(d), projected(d);
  for (std::size_t i = 0; i < image_count_; ++i) {
    linear(w.proj1, visual.tokens.row(i), w.proj1_bias, hidden);
    for (double& v : hidden) v = gelu(v);
    linear(w.proj2, hidden, w.proj2_bias, projected);
    forward_position(projected, mode == PositionMode::original ? image_positions_[i] : i);
  }
}

void DecoderSession::push(TokenId id) {
  const ModelConfig& c = model_->config();
  if (id >= c.vocab_size)
    throw InputError("token id " + std::to_string(id) + " outside vocabulary of size " + std::to_string(c.vocab_size));
  forward_position(model_->weights().token_embed.row(id), text_base_ + text_count_);
  ++text_count_;
}

void DecoderSession::push(std::span<const TokenId> ids) {
  for (TokenId id : ids) push(id);
}

void DecoderSession::forward_position(std::span<const double> embedding, std::size_t position) {
  const ModelConfig& c = model_->config();
  const Weights& w = model_->weights();
  const auto& k = kernels::active();
  const std::size_t d = c.embed_dim;
  const std::size_t heads = c.num_heads;
  const std::size_t hd = c.head_dim();
  const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

  std::vector<double> x(embedding.begin(), embedding.end());
  add_position(x, position);
  std::vector<double> xn(d), q(d), key(d), val(d), attn(d), proj(d);
  last_attention_.assign(c.decoder_layers * heads, {});

  for (std::size_t l = 0; l < w.decoder.size(); ++l) {
    const BlockWeights& b = w.decoder[l];
    layer_norm(x, xn);
    k.matvec(b.wq.flat().data(), xn.data(), q.data(), d, d);
    k.matvec(b.wk.flat().data(), xn.data(), key.data(), d, d);
    k.matvec(b.wv.flat().data(), xn.data(), val.data(), d, d);
    keys_[l].append_row(key);
    values_[l].append_row(val);
    const std::size_t len = keys_[l].rows();
    std::fill(attn.begin(), attn.end(), 0.0);
    for (std::size_t head = 0; head < heads; ++head) {
      const std::size_t off = head * hd;
      std::vector<double>& scores = last_attention_[l * heads + head];
      scores.resize(len);
      for (std::size_t s = 0; s < len; ++s) scores[s] = k.dot(q.data() + off, keys_[l].row(s).data() + off, hd) * inv_sqrt_hd;
      softmax_inplace(scores);
      for (std::size_t s = 0; s < len; ++s) k.axpy(scores[s], values_[l].row(s).data() + off, attn.data() + off, hd);
    }
    k.matvec(b.wo.flat().data(), attn.data(), proj.data(), d, d);
    k.axpy(1.0, proj.data(), x.data(), d);
    mlp_residual(b, x);
  }

  layer_norm(x, xn);
  last_logits_.resize(c.vocab_size);
  linear(w.lm_head, xn, w.lm_bias, last_logits_);
  ++length_;
}

StepResult DecoderSession::current(std::size_t step_index) const {
  const ModelConfig& c = model_->config();
  const auto& k = kernels::active();
  const std::size_t heads = c.num_heads;
  const std::size_t m = image_count_;

  StepResult out;
  out.logits = last_logits_;
  AttentionRecord& rec = out.attention;
  rec.source = AttentionSource::decoder_step;
  rec.step_index = step_index;
  rec.positions = image_positions_;
  for (std::size_t l = 0; l < c.decoder_layers; ++l) {
    for (std::size_t head = 0; head < heads; ++head) {
      const auto& full = last_attention_[l * heads + head];
      AttentionRow row{l, head, std::vector<double>(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(m)), 0.0};
      row.image_mass = k.reduce_sum(row.weights.data(), m);
      if (row.image_mass > 0.0) {
        k.scale(1.0 / row.image_mass, row.weights.data(), m);
      } else {
        std::fill(row.weights.begin(), row.weights.end(), 1.0 / static_cast<double>(m));
      }
      rec.rows.push_back(std::move(row));
    }
  }

  rec.aggregate.assign(m, 0.0);
  std::size_t used = 0;
  for (const auto& row : rec.rows) {
    if (c.decoder_aggregation == DecoderAggregation::last_layer_mean_heads && row.layer + 1 != c.decoder_layers) continue;
    k.axpy(1.0, row.weights.data(), rec.aggregate.data(), m);
    ++used;
  }
  k.scale(1.0 / static_cast<double>(used), rec.aggregate.data(), m);
  return out;
}

}  // namespace damro::lvlm
