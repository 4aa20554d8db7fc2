#include <cmath>
#include <numeric>
#include <vector>

#include "damro/attention_tap.hpp"
#include "damro/errors.hpp"
#include "damro/numerics.hpp"
#include "damro/rng.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace damro::tap;

TEST_CASE("cls_attention examples") {
  damro::Matrix one(1, 3, 0.2);
  std::vector<double> q{1.0, -2.0, 0.5};
  CHECK(cls_attention(q, one, 3.0).weights == std::vector<double>{1.0});

  damro::Matrix same(2, 3, 0.7);
  auto eq = cls_attention(q, same, 3.0);
  CHECK(eq.weights[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(eq.weights[1] == doctest::Approx(0.5).epsilon(1e-15));

  auto ln3 = cls_attention_from_scores(std::vector<double>{0.0, std::log(3.0)}, 4.0);
  CHECK(std::fabs(ln3.weights[0] - 0.25) <= 1e-12);
  CHECK(std::fabs(ln3.weights[1] - 0.75) <= 1e-12);
  CHECK(ln3.d == 4.0);
}

TEST_CASE("cls_attention scales by sqrt(d)") {
  damro::Matrix keys(2, 1);
  keys(0, 0) = 0.0;
  keys(1, 0) = 2.0 * std::log(3.0);
  auto a = cls_attention(std::vector<double>{1.0}, keys, 4.0);
  CHECK(std::fabs(a.weights[1] - 0.75) <= 1e-12);
}

TEST_CASE("cls_attention errors") {
  damro::Matrix keys(2, 3, 0.1);
  CHECK_THROWS_AS(cls_attention(std::vector<double>{1.0, 2.0}, keys, 1.0), damro::InputError);
  CHECK_THROWS_AS(cls_attention(std::vector<double>{1.0, 2.0, 3.0}, keys, 0.0), damro::InputError);
  CHECK_THROWS_AS(cls_attention(std::vector<double>{1.0, 2.0, 3.0}, keys, -1.0), damro::InputError);
  CHECK_THROWS_AS(cls_attention(std::vector<double>{1.0}, damro::Matrix{}, 1.0), damro::InputError);
}

TEST_CASE("cls_attention is shift invariant") {
  damro::Rng rng(17);
  for (int t = 0; t < 50; ++t) {
    std::vector<double> s(37), shifted(37);
    const double c = 20.0 * rng.uniform() - 10.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = 6.0 * rng.gaussian();
      shifted[i] = s[i] + c;
    }
    auto a = cls_attention_from_scores(s, 8.0);
    auto b = cls_attention_from_scores(shifted, 8.0);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(std::fabs(a.weights[i] - b.weights[i]) <= 1e-12);
  }
}

TEST_CASE("select_outliers examples") {
  ClsAttention a{{0.1, 0.5, 0.4}, 1.0};
  CHECK(select_outliers(a, 1).indices == std::vector<std::size_t>{1});
  CHECK(select_outliers(a, 3).indices == std::vector<std::size_t>{1, 2, 0});
  ClsAttention tie{{0.4, 0.4, 0.2}, 1.0};
  CHECK(select_outliers(tie, 1).indices == std::vector<std::size_t>{0});
  CHECK(select_outliers(tie, 1).k == 1);
  CHECK_THROWS_AS(select_outliers(a, 0), damro::InputError);
  CHECK_THROWS_AS(select_outliers(a, 4), damro::InputError);
}

TEST_CASE("select_outliers matches a full-sort oracle, ties included") {
  damro::Rng rng(2024);
  for (std::size_t n : {3u, 17u, 256u, 576u}) {
    for (int t = 0; t < 60; ++t) {
      std::vector<double> logits(n);
      const auto levels = 1 + rng.next_u64() % 8;
      for (double& x : logits) x = static_cast<double>(rng.next_u64() % levels);
      auto attn = cls_attention_from_scores(logits, 1.0);
      const std::size_t k = 1 + rng.next_u64() % n;
      auto got = select_outliers(attn, k);
      CHECK(got.indices == testing_support::sort_oracle_top(attn.weights, k));
    }
  }
}

TEST_CASE("selection invariant under logit shift") {
  damro::Rng rng(5);
  for (int t = 0; t < 40; ++t) {
    std::vector<double> s(64), shifted(64);
    for (std::size_t i = 0; i < s.size(); ++i) {
      s[i] = std::round(4.0 * rng.gaussian());
      shifted[i] = s[i] + 3.0;
    }
    auto a = select_outliers(cls_attention_from_scores(s, 1.0), 10);
    auto b = select_outliers(cls_attention_from_scores(shifted, 1.0), 10);
    CHECK(a == b);
  }
}

TEST_CASE("top_positions") {
  std::vector<double> w{0.2, 0.3, 0.3, 0.2};
  CHECK(top_positions(w, 2) == std::vector<std::size_t>{1, 2});
  CHECK(top_positions(w, 3) == std::vector<std::size_t>{1, 2, 0});
  CHECK_THROWS_AS(top_positions(w, 5), damro::InputError);
}

TEST_CASE("default_topk") {
  CHECK(default_topk(576) == 10);
  CHECK(default_topk(256) == 4);
  CHECK(default_topk(64) == 1);
  CHECK(default_topk(1) == 1);
  CHECK(default_topk(144) == 3);
  CHECK(default_topk(1024) == 18);
}

TEST_CASE("outlier set json") {
  OutlierSet s{{4, 0, 9}, 3};
  CHECK(to_json(s) == nlohmann::json::parse("[4,0,9]"));
  CHECK(outlier_set_from_json(to_json(s)) == s);
  CHECK_THROWS_AS(outlier_set_from_json(nlohmann::json::parse("[1,-2]")), damro::InputError);
}
