#pragma once

#include <vector>

#include "damro/lvlm.hpp"
#include "damro/matrix.hpp"

namespace damro::lvlm {

struct BlockWeights {
  Matrix wq, wk, wv, wo;  // embed x embed
  Matrix w1;              // hidden x embed
  std::vector<double> b1;
  Matrix w2;  // embed x hidden
  std::vector<double> b2;
};

struct Weights {
  // encoder
  Matrix patch_embed;  // embed x patch_dim
  std::vector<double> patch_bias;
  std::vector<double> cls_token;
  std::vector<BlockWeights> encoder;
  // projector
  Matrix proj1;
  std::vector<double> proj1_bias;
  Matrix proj2;
  std::vector<double> proj2_bias;
  // decoder
  Matrix token_embed;  // vocab x embed
  std::vector<BlockWeights> decoder;
  Matrix lm_head;  // vocab x embed
  std::vector<double> lm_bias;
};

// Draws every tensor from one Rng(config.weight_seed) stream in declaration
// order: encoder, projector, decoder, output head.
Weights generate_weights(const ModelConfig& config);

}  // namespace damro::lvlm
