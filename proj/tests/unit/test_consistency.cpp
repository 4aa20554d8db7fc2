#include <cmath>
#include <vector>

#include "damro/consistency.hpp"
#include "damro/errors.hpp"
#include "damro/rng.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace damro::analysis;

namespace {

std::vector<double> random_attention(damro::Rng& rng, std::size_t n, bool ties) {
  std::vector<double> w(n);
  double s = 0.0;
  for (double& x : w) {
    x = ties ? static_cast<double>(rng.next_u64() % 5) : rng.uniform();
    s += x;
  }
  if (s == 0.0) w[0] = s = 1.0;
  for (double& x : w) x /= s;
  return w;
}

}  // namespace

TEST_CASE("top_set examples") {
  std::vector<double> a{0.5, 0.3, 0.2};
  CHECK(top_set(a, 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(top_set(a, 2) == std::vector<std::size_t>{0, 1});
  CHECK(top_set(std::vector<double>{0.4, 0.4, 0.2}, 1) == std::vector<std::size_t>{0});
  CHECK(top_set(std::vector<double>{0.1, 0.2, 0.7}, 2) == std::vector<std::size_t>{1, 2});
  CHECK_THROWS_AS(top_set(a, 0), damro::InputError);
  CHECK_THROWS_AS(top_set(a, 4), damro::InputError);
}

TEST_CASE("h_consistency examples") {
  std::vector<double> enc(10, 0.01), dec(10, 0.01);
  enc[5] = 0.4;
  enc[7] = 0.3;
  dec[7] = 0.4;
  dec[9] = 0.3;
  CHECK(h_consistency(enc, dec, 2) == 0.5);
  for (std::size_t i = 1; i <= 10; ++i) CHECK(h_consistency(enc, enc, i) == 1.0);
  std::vector<double> a{0.9, 0.1, 0.0, 0.0}, b{0.0, 0.0, 0.1, 0.9};
  CHECK(h_consistency(a, b, 2) == 0.0);
  CHECK_THROWS_AS(h_consistency(a, std::vector<double>{1.0}, 1), damro::InputError);
}

TEST_CASE("f_influence examples") {
  std::vector<double> enc{0.1, 0.6, 0.2, 0.05, 0.05};
  std::vector<double> dec{0.0, 1.0, 0.0, 0.0, 0.0};
  CHECK(f_influence(enc, dec) == 1.0);
  CHECK(f_influence(std::vector<double>{0.4, 0.3, 0.2, 0.1}, std::vector<double>(4, 0.25)) == 0.75);
  // unnormalized decoder mass
  CHECK(f_influence(std::vector<double>{0.4, 0.3, 0.2, 0.1}, std::vector<double>{0.1, 0.1, 0.1, 0.1}) ==
        doctest::Approx(0.75).epsilon(1e-15));
  CHECK_THROWS_AS(f_influence(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.5}), damro::InputError);
  CHECK_THROWS_AS(f_influence(std::vector<double>(4, 0.25), std::vector<double>(4, 0.0)), damro::InputError);
  CHECK_THROWS_AS(f_influence(std::vector<double>(4, 0.25), std::vector<double>(5, 0.2)), damro::InputError);
}

TEST_CASE("concentration_curve examples") {
  CHECK(concentration_curve(std::vector<double>{0.0, 1.0, 0.0}, 3) == std::vector<double>{1.0, 1.0, 1.0});
  CHECK(concentration_curve(std::vector<double>(4, 0.25), 4) == std::vector<double>{0.25, 0.5, 0.75, 1.0});
  auto c = concentration_curve(std::vector<double>{0.1, 0.6, 0.3}, 2);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == 0.6);
  CHECK(c[1] == doctest::Approx(0.9).epsilon(1e-15));
  CHECK_THROWS_AS(concentration_curve(std::vector<double>{1.0}, 2), damro::InputError);
}

TEST_CASE("H and F agree with brute-force oracles") {
  damro::Rng rng(576);
  for (std::size_t n : {3u, 10u, 64u, 256u, 576u}) {
    for (int t = 0; t < 40; ++t) {
      const bool ties = t % 2 == 0;
      auto enc = random_attention(rng, n, ties), dec = random_attention(rng, n, !ties);
      for (std::size_t i = 1; i <= std::min<std::size_t>(10, n); ++i)
        CHECK(h_consistency(enc, dec, i) == testing_support::brute_h(enc, dec, i));
      const double f = f_influence(enc, dec);
      CHECK(f == testing_support::brute_f(enc, dec));
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
    }
  }
}

TEST_CASE("F is 1 when the decoder support sits inside the encoder top-3") {
  damro::Rng rng(8);
  for (int t = 0; t < 100; ++t) {
    auto enc = random_attention(rng, 50, false);
    auto top = top_set(enc, 3);
    std::vector<double> dec(50, 0.0);
    for (auto p : top) dec[p] = rng.uniform() + 0.01;
    CHECK(f_influence(enc, dec) == 1.0);
  }
}

TEST_CASE("concentration is nondecreasing and ends at the total mass") {
  damro::Rng rng(9);
  for (int t = 0; t < 100; ++t) {
    auto w = random_attention(rng, 30, t % 3 == 0);
    auto c = concentration_curve(w, 30);
    for (std::size_t j = 1; j < c.size(); ++j) CHECK(c[j] >= c[j - 1]);
    CHECK(std::fabs(c.back() - 1.0) <= 1e-9);
  }
}

TEST_CASE("aggregate_reports") {
  std::vector<double> enc{0.4, 0.3, 0.2, 0.1};
  auto r1 = analyze_pair(enc, enc, 4, 4);
  SUBCASE("single report is itself") {
    std::vector<ConsistencyReport> one{r1};
    auto rows = aggregate_reports(one, GroupBy::none);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].group == "all");
    CHECK(rows[0].count == 1);
    CHECK(rows[0].mean.h_curve == r1.h_curve);
    CHECK(rows[0].mean.f_value == r1.f_value);
    CHECK(rows[0].mean.concentration == r1.concentration);
  }
  SUBCASE("mean of f") {
    ConsistencyReport a = r1, b = r1;
    a.f_value = 0.2;
    b.f_value = 0.4;
    std::vector<ConsistencyReport> two{a, b};
    CHECK(aggregate_reports(two, GroupBy::none)[0].mean.f_value == doctest::Approx(0.3).epsilon(1e-15));
  }
  SUBCASE("HA and Non-HA groups") {
    ConsistencyReport a = r1, b = r1, c = r1;
    a.labels.hallucination = "HA";
    b.labels.hallucination = "Non-HA";
    c.labels.hallucination = "HA";
    a.labels.granularity = Granularity::object;
    std::vector<ConsistencyReport> three{a, b, c};
    auto rows = aggregate_reports(three, GroupBy::hallucination);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].group == "HA");
    CHECK(rows[0].count == 2);
    CHECK(rows[1].group == "Non-HA");
    auto both = aggregate_reports(three, GroupBy::both);
    CHECK(both.size() == 3);
    CHECK(h_curve_csv(rows).rfind("group,i,H_i\n", 0) == 0);
    CHECK(concentration_csv(rows).rfind("group,j,share\n", 0) == 0);
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(aggregate_reports(std::vector<ConsistencyReport>{}, GroupBy::none), damro::InputError);
  }
}

TEST_CASE("attention dump json") {
  AttentionDump d{"encoder_cls", {0.5, 0.25, 0.25}};
  auto j = to_json(d);
  CHECK(j.at("n") == 3);
  auto back = attention_dump_from_json(j);
  CHECK(back.weights == d.weights);
  CHECK(back.source == d.source);
  j["n"] = 4;
  CHECK_THROWS_AS(attention_dump_from_json(j), damro::InputError);
  CHECK(granularity_from_string(to_string(Granularity::object)) == Granularity::object);
}
