#include <cmath>
#include <numeric>
#include <vector>

#include "damro/decoder.hpp"
#include "damro/errors.hpp"
#include "damro/json_io.hpp"
#include "damro/kernels.hpp"
#include "damro/numerics.hpp"
#include "doctest.h"

using namespace damro::decode;
using damro::lvlm::TokenId;

namespace {

damro::lvlm::ModelConfig toy_config() { return damro::lvlm::load_model_config(DAMRO_SOURCE_DIR "/data/toy_model.json"); }

damro::lvlm::ImageInput toy_image(const damro::lvlm::ModelConfig& c) {
  return damro::lvlm::image_from_json(damro::json_io::read_file(DAMRO_SOURCE_DIR "/data/blocks_seed7.json"), c);
}

const damro::lvlm::PromptTokens kPrompt{{3, 14, 15}};

std::vector<double> random_logits(damro::Rng& rng, std::size_t n, double scale) {
  std::vector<double> v(n);
  for (double& x : v) x = scale * rng.gaussian();
  return v;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

TEST_CASE("contrastive_distribution examples") {
  auto p = contrastive_distribution(std::vector<double>{1, 2}, std::vector<double>{2, 1}, 1.0);
  CHECK(std::fabs(p[0] - 0.04743) <= 1e-5);
  CHECK(std::fabs(p[1] - 0.95257) <= 1e-5);

  damro::Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    auto full = random_logits(rng, 33, 3.0), neg = random_logits(rng, 33, 3.0);
    CHECK(contrastive_distribution(full, neg, 0.0) == damro::softmax(full));
    auto same = contrastive_distribution(full, full, 1.7);
    auto ref = damro::softmax(full);
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::fabs(same[i] - ref[i]) <= 1e-12);
  }
  CHECK_THROWS_AS(contrastive_distribution(std::vector<double>{1}, std::vector<double>{1, 2}, 1.0), damro::InputError);
  CHECK_THROWS_AS(contrastive_distribution(std::vector<double>{NAN}, std::vector<double>{1}, 1.0), damro::InputError);
}

TEST_CASE("contrastive_distribution is shift invariant") {
  damro::Rng rng(2);
  for (int t = 0; t < 100; ++t) {
    auto full = random_logits(rng, 40, 4.0), neg = random_logits(rng, 40, 4.0);
    const double c = 50.0 * rng.uniform() - 25.0;
    auto fs = full, ns = neg;
    for (auto& x : fs) x += c;
    for (auto& x : ns) x += c;
    auto a = contrastive_distribution(full, neg, 0.8), b = contrastive_distribution(fs, ns, 0.8);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-12);
  }
}

TEST_CASE("plausibility_filter examples") {
  std::vector<double> cand{0.2, 0.5, 0.3};
  auto keep = plausibility_filter(std::vector<double>{0.1, 0.1, 0.8}, cand, 0.0);
  for (std::size_t i = 0; i < 3; ++i) CHECK(keep[i] == doctest::Approx(cand[i]).epsilon(1e-15));

  CHECK(plausibility_filter(std::vector<double>{0.7, 0.2, 0.1}, cand, 1.0) == std::vector<double>{1.0, 0.0, 0.0});

  const double third = 1.0 / 3.0;
  auto out = plausibility_filter(std::vector<double>{0.7, 0.25, 0.05}, std::vector<double>{third, third, third}, 0.1);
  CHECK(out[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out[1] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(out[2] == 0.0);
  CHECK(plausible_set(std::vector<double>{0.7, 0.25, 0.05}, 0.1) == std::vector<std::size_t>{0, 1});

  CHECK_THROWS_AS(plausible_set(std::vector<double>{1.0}, 1.5), damro::InputError);
  CHECK_THROWS_AS(plausible_set(std::vector<double>{1.0}, -0.1), damro::InputError);
}

TEST_CASE("sample_token") {
  std::vector<double> onehot(6, 0.0);
  onehot[4] = 1.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    damro::Rng rng(seed);
    CHECK(sample_token(onehot, rng) == 4);
  }
  std::vector<double> dist{0.1, 0.2, 0.3, 0.4};
  damro::Rng a(99), b(99);
  for (int i = 0; i < 50; ++i) CHECK(sample_token(dist, a) == sample_token(dist, b));

  std::vector<double> uniform(4, 0.25);
  std::vector<std::size_t> counts(4, 0);
  damro::Rng rng(42);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) ++counts[sample_token(uniform, rng)];
  for (auto c : counts) CHECK(std::fabs(static_cast<double>(c) / draws - 0.25) <= 0.01);

  std::vector<double> zeros(3, 0.0);
  CHECK_THROWS_AS(sample_token(zeros, rng), damro::InputError);
}

TEST_CASE("sample_token never picks a zero-probability token") {
  std::vector<double> dist{0.0, 0.5, 0.0, 0.5, 0.0};
  damro::Rng rng(3);
  for (int i = 0; i < 10000; ++i) {
    auto t = sample_token(dist, rng);
    CHECK((t == 1 || t == 3));
  }
}

TEST_CASE("default alpha and config validation") {
  CHECK(default_alpha(576, TaskStyle::caption) == 0.5);
  CHECK(default_alpha(576, TaskStyle::short_answer) == 2.0);
  CHECK(default_alpha(256, TaskStyle::caption) == 1.5);
  CHECK(default_alpha(256, TaskStyle::short_answer) == 0.5);
  DecodeConfig c;
  CHECK(c.seed == 42);
  CHECK(c.max_new_tokens == 1024);
  CHECK(c.beta == 0.1);
  c.max_new_tokens = 0;
  CHECK_THROWS_AS(c.validate(), damro::ConfigError);
  c = DecodeConfig{};
  c.alpha = -1.0;
  CHECK_THROWS_AS(c.validate(), damro::ConfigError);
  c = DecodeConfig{};
  c.beta = 1.1;
  CHECK_THROWS_AS(c.validate(), damro::ConfigError);
}

TEST_CASE("generation") {
  const auto cfg = toy_config();
  auto model = damro::lvlm::build_model(cfg);
  const auto image = toy_image(cfg);

  SUBCASE("alpha = 0 matches the baseline") {
    DecodeConfig c;
    c.alpha = 0.0;
    c.max_new_tokens = 200;
    auto d = damro_generate(model, image, kPrompt, c);
    auto b = baseline_generate(model, image, kPrompt, c);
    CHECK(d.tokens == b.tokens);
    for (std::size_t t = 0; t < d.trace.steps.size(); ++t)
      CHECK(d.trace.steps[t].sampling == b.trace.steps[t].sampling);
  }

  SUBCASE("negative branch equal to the full branch collapses to the baseline") {
    DecodeConfig c;
    c.alpha = 1.3;
    c.k = cfg.num_patches();
    c.max_new_tokens = 200;
    auto d = damro_generate(model, image, kPrompt, c);
    auto b = baseline_generate(model, image, kPrompt, c);
    CHECK(d.tokens == b.tokens);
    CHECK(d.trace.steps[0].full_logits == d.trace.steps[0].negative_logits);
  }

  SUBCASE("EOS-only distribution stops after one token") {
    std::vector<double> bias(cfg.vocab_size, 0.0);
    bias[cfg.eos_id()] = 1000.0;
    auto biased = model->with_output_bias(bias);
    auto r = damro_generate(biased, image, kPrompt, DecodeConfig{});
    CHECK(r.tokens == std::vector<TokenId>{cfg.eos_id()});
    CHECK(r.trace.stopped_by_eos);
  }

  SUBCASE("max_new_tokens bounds the output") {
    DecodeConfig c;
    c.max_new_tokens = 5;
    auto r = damro_generate(model, image, kPrompt, c);
    CHECK(r.tokens.size() <= 5);
    c.max_new_tokens = 0;
    CHECK_THROWS_AS(damro_generate(model, image, kPrompt, c), damro::ConfigError);
  }

  SUBCASE("trace invariants") {
    DecodeConfig c;
    c.max_new_tokens = 120;
    auto r = damro_generate(model, image, kPrompt, c);
    CHECK(r.trace.config.k == damro::tap::default_topk(cfg.num_patches()));
    CHECK(r.trace.outliers.indices.size() == r.trace.config.k);
    REQUIRE(r.trace.steps.size() == r.tokens.size());
    for (const auto& s : r.trace.steps) {
      CHECK(std::fabs(sum(s.contrastive) - 1.0) <= 1e-9);
      CHECK(std::fabs(sum(s.sampling) - 1.0) <= 1e-9);
      CHECK(std::fabs(sum(s.decoder_attention) - 1.0) <= 1e-9);
      for (double v : s.sampling) CHECK(v >= 0.0);
      CHECK(std::find(s.head.begin(), s.head.end(), s.token) != s.head.end());
      CHECK(s.sampling[s.token] > 0.0);
    }
  }

  SUBCASE("encoder runs once per call") {
    DecodeConfig c;
    c.max_new_tokens = 30;
    const auto before = model->encoder_invocations();
    damro_generate(model, image, kPrompt, c);
    CHECK(model->encoder_invocations() == before + 1);
  }

  SUBCASE("reproducible") {
    DecodeConfig c;
    c.max_new_tokens = 64;
    auto a = damro_generate(model, image, kPrompt, c);
    auto b = damro_generate(model, image, kPrompt, c);
    CHECK(a.tokens == b.tokens);
    CHECK(to_json(a.trace, a.tokens).dump() == to_json(b.trace, b.tokens).dump());
  }

  SUBCASE("keep-only with all tokens reproduces full-context logits") {
    DecodeConfig c;
    c.max_new_tokens = 20;
    auto full = baseline_generate(model, image, kPrompt, c);
    c.keep_only_count = cfg.num_patches();
    auto kept = baseline_generate(model, image, kPrompt, c);
    REQUIRE(full.trace.steps.size() == kept.trace.steps.size());
    for (std::size_t t = 0; t < full.trace.steps.size(); ++t)
      CHECK(full.trace.steps[t].full_logits == kept.trace.steps[t].full_logits);
  }

  SUBCASE("oversized k is rejected") {
    DecodeConfig c;
    c.k = cfg.num_patches() + 1;
    CHECK_THROWS_AS(damro_generate(model, image, kPrompt, c), damro::ConfigError);
  }
}

TEST_CASE("golden token sequence under every kernel variant") {
  const auto cfg = toy_config();
  auto model = damro::lvlm::build_model(cfg);
  const auto image = toy_image(cfg);
  const std::vector<TokenId> golden_prefix{11, 49, 62, 53, 22, 1, 49, 62, 53, 16, 16, 16, 16, 16, 16, 16, 16, 16, 2, 11, 49, 11, 49, 11};
  const std::size_t golden_length = 590;

  const auto& saved = damro::kernels::active();
  for (const auto* table : {&damro::kernels::scalar_table(), damro::kernels::avx2_table()}) {
    if (!table) continue;
    CAPTURE(table->name);
    damro::kernels::set_active(*table);
    auto r = damro_generate(model, image, kPrompt, DecodeConfig{});
    CHECK(r.tokens.size() == golden_length);
    CHECK(r.trace.stopped_by_eos);
    REQUIRE(r.tokens.size() >= golden_prefix.size());
    CHECK(std::vector<TokenId>(r.tokens.begin(), r.tokens.begin() + golden_prefix.size()) == golden_prefix);
    CHECK(r.trace.outliers.indices == std::vector<std::size_t>{15});
  }
  damro::kernels::set_active(saved);
}
