#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "oracles.hpp"
#include "survcart/error.hpp"
#include "survcart/split.hpp"

using namespace survcart;

namespace {

std::vector<std::uint8_t> bytes(const std::vector<int>& v) { return {v.begin(), v.end()}; }

const std::vector<std::string> kLabels{"L0", "L1", "L2", "L3"};

SurvivalDataset to_dataset(const oracle::Sample& s) {
  auto d = SurvivalDataset::from_times(s.time, bytes(s.event));
  d.add_continuous("x", s.x);
  std::vector<std::string> g;
  for (int l : s.level) g.push_back(kLabels[static_cast<std::size_t>(l)]);
  d.add_categorical("g", g);
  return d;
}

std::vector<int> flipped(const std::vector<int>& e) {
  std::vector<int> out;
  for (int v : e) out.push_back(1 - v);
  return out;
}

}  // namespace

TEST_CASE("log-rank hand tally") {
  const std::vector<double> t{1, 2, 3, 4};
  const std::vector<std::uint8_t> e{1, 1, 1, 1};
  const std::vector<std::uint8_t> g{1, 1, 0, 0};
  const auto r = logrank(t, e, g);
  CHECK(r.observed == doctest::Approx(2.0));
  CHECK(r.expected == doctest::Approx(0.5 + 1.0 / 3.0));
  CHECK(r.variance == doctest::Approx(0.25 + 2.0 / 9.0));
  CHECK(r.statistic == doctest::Approx((2.0 - 0.5 - 1.0 / 3.0) / std::sqrt(0.25 + 2.0 / 9.0)).epsilon(1e-12));
  CHECK(r.statistic == doctest::Approx(1.698).epsilon(1e-3));
  const std::vector<std::uint8_t> swapped{0, 0, 1, 1};
  CHECK(logrank(t, e, swapped).statistic == doctest::Approx(-r.statistic).epsilon(1e-14));
}

TEST_CASE("log-rank copies and edge cases") {
  const std::vector<double> t{1, 3, 5, 1, 3, 5};
  const std::vector<std::uint8_t> e{1, 0, 1, 1, 0, 1};
  const std::vector<std::uint8_t> g{1, 1, 1, 0, 0, 0};
  CHECK(std::fabs(logrank(t, e, g).statistic) < 1e-14);
  const std::vector<std::uint8_t> none(6, 0);
  const auto silent = logrank(t, none, g);
  CHECK(silent.no_events);
  CHECK(silent.statistic == 0.0);
  try {
    logrank(t, e, none);
    FAIL("expected EmptyGroup");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::EmptyGroup);
  }
}

TEST_CASE("log-rank and best split agree with brute force on small datasets") {
  Philox4x32 rng(2718);
  std::size_t cases = 0, continuous_found = 0, categorical_found = 0;
  for (std::size_t rep = 0; rep < 12000; ++rep) {
    const std::size_t n = 2 + rng.below(11);
    const auto s = oracle::small_sample(rng, n);
    const std::size_t minbucket = 1 + rng.below(3);
    const auto data = to_dataset(s);
    for (auto mode : {Component::Event, Component::Censor}) {
      const auto ev = mode == Component::Event ? s.event : flipped(s.event);
      ++cases;

      // Every cutpoint of the incremental scan against a from-scratch tally.
      const auto scan = logrank_scan(s.time, bytes(ev), s.x);
      for (std::size_t k = 0; k < scan.cutpoints.size(); ++k) {
        std::vector<int> group;
        for (double v : s.x) group.push_back(v <= scan.cutpoints[k] ? 1 : 0);
        const auto ref = oracle::logrank(s.time, ev, group);
        REQUIRE(std::fabs(scan.statistic[k] - ref.statistic) <= 1e-9);
        const auto lib = logrank(s.time, bytes(ev), bytes(group));
        REQUIRE(std::fabs(lib.statistic - ref.statistic) <= 1e-12);
        REQUIRE(std::fabs(lib.variance - ref.variance) <= 1e-12);
      }

      const auto want = oracle::best_continuous(s.time, ev, s.x, minbucket);
      const auto got = best_split(data, "x", mode, minbucket);
      REQUIRE(want.has_value() == got.has_value());
      if (want) {
        ++continuous_found;
        REQUIRE(got->cutpoint == want->cutpoint);
        REQUIRE(got->left_n == want->left_n);
        REQUIRE(std::fabs(got->lr - want->lr) <= 1e-9);
      }

      const auto want_cat = oracle::best_categorical(s.time, ev, s.level, minbucket);
      const auto got_cat = best_split(data, "g", mode, minbucket);
      REQUIRE(want_cat.has_value() == got_cat.has_value());
      if (want_cat) {
        ++categorical_found;
        std::vector<std::string> labels;
        for (int l : want_cat->left_levels) labels.push_back(kLabels[static_cast<std::size_t>(l)]);
        REQUIRE(got_cat->left_levels == labels);
        REQUIRE(got_cat->left_n == want_cat->left_n);
        REQUIRE(std::fabs(got_cat->lr - want_cat->lr) <= 1e-12);
      }
    }
  }
  CHECK(cases >= 10000);
  CHECK(continuous_found > 1000);
  CHECK(categorical_found > 1000);
}

TEST_CASE("log-rank depends on time only through its order") {
  Philox4x32 rng(5);
  for (int rep = 0; rep < 500; ++rep) {
    const auto s = oracle::small_sample(rng, 12);
    std::vector<double> warped;
    for (double t : s.time) warped.push_back(std::log(t) * 3.0 + t * t);
    const auto a = logrank_scan(s.time, bytes(s.event), s.x);
    const auto b = logrank_scan(warped, bytes(s.event), s.x);
    REQUIRE(a.statistic == b.statistic);
  }
}

TEST_CASE("best split ignores subject order") {
  Philox4x32 rng(6);
  for (int rep = 0; rep < 300; ++rep) {
    const auto s = oracle::small_sample(rng, 40);
    oracle::Sample r;
    std::vector<std::size_t> perm(s.time.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.below(i)]);
    for (std::size_t i : perm) {
      r.time.push_back(s.time[i]);
      r.event.push_back(s.event[i]);
      r.x.push_back(s.x[i]);
      r.level.push_back(s.level[i]);
    }
    for (const char* var : {"x", "g"}) {
      for (auto mode : {Component::Event, Component::Censor}) {
        const auto a = best_split(to_dataset(s), var, mode, 5);
        const auto b = best_split(to_dataset(r), var, mode, 5);
        REQUIRE(a.has_value() == b.has_value());
        if (!a) continue;
        CHECK(a->cutpoint == b->cutpoint);
        CHECK(a->left_levels == b->left_levels);
        CHECK(a->lr == doctest::Approx(b->lr).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("constant variable and minbucket admit no split") {
  auto d = SurvivalDataset::from_times({1, 2, 3, 4}, {1, 1, 0, 1});
  d.add_continuous("c", {5, 5, 5, 5});
  d.add_continuous("x", {1, 2, 3, 4});
  CHECK(!best_split(d, "c", Component::Event, 1));
  CHECK(!search_splits(d, "c", Component::Event, 1).reason.empty());
  CHECK(!best_split(d, "x", Component::Event, 3));
  const auto s = search_splits(d, "x", Component::Event, 2);
  REQUIRE(s.candidates.size() == 1);
  CHECK(s.candidates[0].cutpoint == 2.5);
}

TEST_CASE("ties in |LR| go to the smallest cutpoint") {
  // Mirror-image halves produce equal |LR| at 1.5 and 3.5.
  auto d = SurvivalDataset::from_times({1, 4, 2, 3, 4, 1}, {1, 1, 1, 1, 1, 1});
  d.add_continuous("x", {1, 2, 3, 3, 4, 5});
  const auto s = search_splits(d, "x", Component::Event, 1);
  REQUIRE(s.best);
  for (const auto& c : s.candidates) {
    CHECK(std::fabs(c.lr) <= std::fabs(s.candidates[*s.best].lr) + 1e-12);
  }
  for (std::size_t k = 0; k < *s.best; ++k) {
    CHECK(std::fabs(s.candidates[k].lr) < std::fabs(s.candidates[*s.best].lr) - 1e-12);
  }
  const auto ranked = ranked_candidates(s);
  CHECK(ranked.front().cutpoint == s.candidates[*s.best].cutpoint);
  for (std::size_t k = 1; k < ranked.size(); ++k) {
    CHECK(std::fabs(ranked[k].lr) <= std::fabs(ranked[k - 1].lr) + 1e-12);
  }
}

TEST_CASE("sharp hazard change is located") {
  std::size_t hits = 0;
  const std::size_t reps = 200;
  for (std::size_t r = 0; r < reps; ++r) {
    Philox4x32 rng(314, r);
    std::vector<double> t, x;
    std::vector<std::uint8_t> e;
    for (int i = 0; i < 200; ++i) {
      const double xi = rng.uniform(0.0, 20.0);
      const double ti = rng.exponential(xi <= 10.0 ? 1.0 / 20.0 : 1.0 / 60.0);
      const double ci = rng.exponential(1.0 / 50.0);
      x.push_back(xi);
      t.push_back(std::min(ti, ci));
      e.push_back(ti <= ci ? 1 : 0);
    }
    auto d = SurvivalDataset::from_times(t, e);
    d.add_continuous("x", x);
    const auto best = best_split(d, "x", Component::Event, 20);
    REQUIRE(best);
    hits += best->cutpoint >= 8.0 && best->cutpoint <= 12.0 ? 1 : 0;
  }
  CHECK(static_cast<double>(hits) / reps >= 0.9);
}

TEST_CASE("censoring mode finds a censoring-only change") {
  std::vector<double> censor_cuts, event_lr, censor_lr;
  for (std::size_t r = 0; r < 50; ++r) {
    Philox4x32 rng(271, r);
    std::vector<double> t, x;
    std::vector<std::uint8_t> e;
    for (int i = 0; i < 400; ++i) {
      const double xi = rng.uniform(0.0, 5.0);
      const double ti = rng.exponential(1.0 / 40.0);
      const double ci = rng.exponential(xi <= 2.5 ? 1.0 / 80.0 : 1.0 / 20.0);
      x.push_back(xi);
      t.push_back(std::min(ti, ci));
      e.push_back(ti <= ci ? 1 : 0);
    }
    auto d = SurvivalDataset::from_times(t, e);
    d.add_continuous("x", x);
    const auto c = best_split(d, "x", Component::Censor, 20);
    const auto ev = best_split(d, "x", Component::Event, 20);
    REQUIRE(c);
    REQUIRE(ev);
    censor_cuts.push_back(c->cutpoint);
    censor_lr.push_back(std::fabs(c->lr));
    event_lr.push_back(std::fabs(ev->lr));
  }
  std::sort(censor_cuts.begin(), censor_cuts.end());
  std::sort(censor_lr.begin(), censor_lr.end());
  std::sort(event_lr.begin(), event_lr.end());
  CHECK(censor_cuts[25] == doctest::Approx(2.5).epsilon(0.1));
  CHECK(censor_lr[25] > 2.0 * event_lr[25]);
}
