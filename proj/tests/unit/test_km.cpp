#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "survcart/error.hpp"
#include "survcart/km.hpp"

using namespace survcart;

namespace {

std::vector<double> surv_at(const KMCurve& c, const std::vector<double>& t) {
  std::vector<double> out;
  for (double v : t) out.push_back(c.at(v));
  return out;
}

}  // namespace

TEST_CASE("complete data product limit") {
  const auto c = km_fit(std::vector<double>{1, 2, 3}, std::vector<std::uint8_t>{1, 1, 1});
  const auto s = surv_at(c, {1, 2, 3});
  CHECK(s[0] == doctest::Approx(2.0 / 3.0));
  CHECK(s[1] == doctest::Approx(1.0 / 3.0));
  CHECK(s[2] == 0.0);
  CHECK(c.at(0.5) == 1.0);
  CHECK(km_median(c) == 2.0);
}

TEST_CASE("censored observation keeps the curve flat") {
  const auto c = km_fit(std::vector<double>{1, 2, 3}, std::vector<std::uint8_t>{1, 0, 1});
  CHECK(c.at(1) == doctest::Approx(2.0 / 3.0));
  CHECK(c.at(2) == doctest::Approx(2.0 / 3.0));
  CHECK(c.at(3) == 0.0);
  CHECK(c.n_risk == std::vector<std::size_t>{3, 2, 1});
}

TEST_CASE("all censored") {
  const auto c = km_fit(std::vector<double>{1, 2, 3}, std::vector<std::uint8_t>{0, 0, 0});
  for (double s : c.surv) CHECK(s == 1.0);
  CHECK(!km_median(c));
  const auto censoring = km_fit(std::vector<double>{1, 2, 3}, std::vector<std::uint8_t>{0, 0, 0},
                                Component::Censor);
  CHECK(km_median(censoring) == 2.0);
}

TEST_CASE("matches the exact rank-form product limit on every small dataset") {
  Philox4x32 rng(161);
  for (int rep = 0; rep < 20000; ++rep) {
    const std::size_t n = 1 + rng.below(8);
    const auto s = oracle::small_sample(rng, n);
    const std::vector<std::uint8_t> ev(s.event.begin(), s.event.end());
    std::vector<int> flipped;
    for (int e : s.event) flipped.push_back(1 - e);
    for (auto flavor : {Component::Event, Component::Censor}) {
      const auto c = km_fit(s.time, ev, flavor);
      const auto want = oracle::product_limit(s.time, flavor == Component::Event ? s.event : flipped);
      REQUIRE(c.time.size() == want.size());
      double prev = 1.0;
      for (std::size_t k = 0; k < want.size(); ++k) {
        REQUIRE(c.time[k] == want[k].first);
        REQUIRE(std::fabs(c.surv[k] - want[k].second.value()) <= 1e-15);
        REQUIRE(c.surv[k] <= prev);
        REQUIRE(c.surv[k] >= 0.0);
        prev = c.surv[k];
      }
      const auto median = oracle::km_median(s.time, flavor == Component::Event ? s.event : flipped);
      REQUIRE(km_median(c) == median);
    }
  }
}

TEST_CASE("empty input") {
  try {
    km_fit(std::vector<double>{}, std::vector<std::uint8_t>{});
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyInput);
  }
}
