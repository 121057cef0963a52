#include <doctest.h>

#include <cmath>
#include <vector>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "survcart/error.hpp"
#include "survcart/model.hpp"

using namespace survcart;

namespace {

const std::vector<double> kTimes{2, 4, 6, 8};
const std::vector<std::uint8_t> kEvents{1, 1, 0, 0};
constexpr Family kFamilies[] = {Family::Exponential, Family::Weibull, Family::LogNormal, Family::Normal};

}  // namespace

TEST_CASE("exponential closed forms for both components") {
  const auto ev = fit(Family::Exponential, Component::Event, kTimes, kEvents);
  const auto ce = fit(Family::Exponential, Component::Censor, kTimes, kEvents);
  CHECK(ev.params[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(ce.params[0] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(ev.contributing == 2);
  CHECK(ce.contributing == 2);
}

TEST_CASE("exponential scores at rate 0.1") {
  Eigen::VectorXd rate(1);
  rate << 0.1;
  const std::vector<double> t{4, 6};
  const std::vector<std::uint8_t> e{1, 0};
  const auto u = score_contributions(Family::Exponential, Component::Event, rate, t, e);
  CHECK(u(0, 0) == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(u(1, 0) == doctest::Approx(-6.0).epsilon(1e-12));
}

TEST_CASE("lognormal censored score at the standard point") {
  Eigen::VectorXd theta(2);
  theta << 0.0, 1.0;
  const std::vector<double> t{1.0};
  const std::vector<std::uint8_t> e{0};
  const auto u = score_contributions(Family::LogNormal, Component::Event, theta, t, e);
  const double hazard_at_zero = (1.0 / std::sqrt(2.0 * M_PI)) / 0.5;
  CHECK(u(0, 0) == doctest::Approx(hazard_at_zero).epsilon(1e-12));
  CHECK(u(0, 0) == doctest::Approx(0.7979).epsilon(1e-4));
  CHECK(std::fabs(u(0, 1)) < 1e-14);
}

TEST_CASE("uncensored lognormal fit is the log-scale mean and population sd") {
  Philox4x32 rng(11);
  std::vector<double> t;
  for (int i = 0; i < 300; ++i) t.push_back(std::exp(1.0 + 0.5 * fixture::standard_normal(rng)));
  const std::vector<std::uint8_t> e(t.size(), 1);
  double mean = 0, ss = 0;
  for (double v : t) mean += std::log(v);
  mean /= static_cast<double>(t.size());
  for (double v : t) ss += (std::log(v) - mean) * (std::log(v) - mean);
  const double sd = std::sqrt(ss / static_cast<double>(t.size()));
  const auto m = fit(Family::LogNormal, Component::Event, t, e);
  CHECK(m.params[0] == doctest::Approx(mean).epsilon(1e-8));
  CHECK(m.params[1] == doctest::Approx(sd).epsilon(1e-8));
}

TEST_CASE("weibull fit on exponential data recovers shape one") {
  Philox4x32 rng(2024);
  std::vector<double> t;
  for (int i = 0; i < 2000; ++i) t.push_back(rng.exponential(0.05));
  const std::vector<std::uint8_t> e(t.size(), 1);
  const auto w = fit(Family::Weibull, Component::Event, t, e);
  const auto x = fit(Family::Exponential, Component::Event, t, e);
  CHECK(w.params[0] >= 0.95);
  CHECK(w.params[0] <= 1.05);
  CHECK(w.params[1] >= 0.045);
  CHECK(w.params[1] <= 0.055);
  CHECK(x.params[0] == doctest::Approx(0.05).epsilon(0.1));
  CHECK(w.loglik >= x.loglik - 1e-9);
}

TEST_CASE("weibull with unit shape reproduces the exponential log-likelihood") {
  Philox4x32 rng(3);
  for (int rep = 0; rep < 50; ++rep) {
    const auto s = fixture::sample(Family::Exponential, 40, 0.3, rng);
    const double rate = rng.uniform(0.01, 1.0);
    Eigen::VectorXd w(2), x(1);
    w << 1.0, rate;
    x << rate;
    for (auto c : {Component::Event, Component::Censor}) {
      const double lw = log_likelihood(Family::Weibull, c, w, s.time, s.event);
      const double lx = log_likelihood(Family::Exponential, c, x, s.time, s.event);
      CHECK(std::fabs(lw - lx) <= 1e-10 * std::max(1.0, std::fabs(lx)));
    }
  }
}

TEST_CASE("score sums vanish at the fitted parameters") {
  Philox4x32 rng(77);
  for (Family family : kFamilies) {
    for (double censoring : {0.0, 0.2, 0.4, 0.6}) {
      for (int rep = 0; rep < 5; ++rep) {
        const auto s = fixture::sample(family, 200, censoring, rng);
        for (auto c : {Component::Event, Component::Censor}) {
          const auto f = try_fit(family, c, s.time, s.event);
          if (!f.fitted()) {
            CHECK(f.status == FitStatus::Degenerate);
            continue;
          }
          const Eigen::VectorXd total = score_contributions(*f.model, s.time, s.event).colwise().sum();
          CAPTURE(to_string(family));
          CAPTURE(censoring);
          CHECK(total.cwiseAbs().maxCoeff() <= 1e-6 * 200);
        }
      }
    }
  }
}

TEST_CASE("information equals the finite-difference average Hessian") {
  Philox4x32 rng(8);
  for (Family family : kFamilies) {
    for (double censoring : {0.0, 0.3, 0.6}) {
      const auto s = fixture::sample(family, 300, censoring, rng);
      const auto m = fit(family, Component::Event, s.time, s.event);
      const auto ll = [&](const Eigen::VectorXd& th) {
        return log_likelihood(family, Component::Event, th, s.time, s.event);
      };
      const Eigen::MatrixXd numeric = -oracle::numeric_hessian(ll, m.params) / 300.0;
      CAPTURE(to_string(family));
      CAPTURE(censoring);
      CHECK((numeric - m.info).norm() <= 1e-4 * m.info.norm());
    }
  }
}

TEST_CASE("exponential information is D over N times rate to the minus two") {
  const auto m = fit(Family::Exponential, Component::Event, kTimes, kEvents);
  CHECK(m.info(0, 0) == doctest::Approx(0.5 / (0.1 * 0.1)).epsilon(1e-12));
}

TEST_CASE("censor fit equals event fit on the flipped data") {
  Philox4x32 rng(9);
  for (Family family : kFamilies) {
    const auto s = fixture::sample(family, 150, 0.4, rng);
    std::vector<std::uint8_t> flipped;
    for (auto e : s.event) flipped.push_back(e ? 0 : 1);
    const auto a = fit(family, Component::Censor, s.time, s.event);
    const auto b = fit(family, Component::Event, s.time, flipped);
    CHECK(a.params == b.params);
    CHECK(a.loglik == b.loglik);
    CHECK(a.info == b.info);
  }
}

TEST_CASE("exponential time rescaling") {
  Philox4x32 rng(10);
  const auto s = fixture::sample(Family::Exponential, 120, 0.25, rng);
  const double c = 3.7;
  std::vector<double> scaled;
  for (double t : s.time) scaled.push_back(c * t);
  const auto a = fit(Family::Exponential, Component::Event, s.time, s.event);
  const auto b = fit(Family::Exponential, Component::Event, scaled, s.event);
  CHECK(b.params[0] == doctest::Approx(a.params[0] / c).epsilon(1e-12));

  auto nested_gain = [&](const std::vector<double>& t) {
    const std::size_t half = t.size() / 2;
    const std::span<const double> all(t);
    const std::span<const std::uint8_t> ev(s.event);
    const double whole = fit(Family::Exponential, Component::Event, all, ev).loglik;
    const double left = fit(Family::Exponential, Component::Event, all.first(half), ev.first(half)).loglik;
    const double right = fit(Family::Exponential, Component::Event, all.subspan(half), ev.subspan(half)).loglik;
    return left + right - whole;
  };
  CHECK(nested_gain(scaled) == doctest::Approx(nested_gain(s.time)).epsilon(1e-9));
  CHECK(nested_gain(s.time) >= -1e-12);
}

TEST_CASE("aic over leaves") {
  ComponentFit e, c;
  e.status = FitStatus::Fitted;
  e.model = FittedModel{};
  e.model->loglik = -60.0;
  c.status = FitStatus::Fitted;
  c.model = FittedModel{};
  c.model->loglik = -40.0;
  std::vector<std::pair<ComponentFit, ComponentFit>> one{{e, c}};
  CHECK(loglik_and_aic(one).aic == doctest::Approx(204.0));

  ComponentFit w = e, x = c;
  w.family = Family::Weibull;
  w.model->loglik = -25.0;
  x.model->loglik = -25.0;
  std::vector<std::pair<ComponentFit, ComponentFit>> two{{w, x}, {w, x}};
  const auto s = loglik_and_aic(two);
  CHECK(s.parameters == 6);
  CHECK(s.aic == doctest::Approx(212.0));
}

TEST_CASE("degenerate and invalid inputs") {
  const std::vector<double> t{1, 2, 3};
  const std::vector<std::uint8_t> all_events{1, 1, 1};
  const auto c = try_fit(Family::Exponential, Component::Censor, t, all_events);
  CHECK(c.status == FitStatus::Degenerate);
  CHECK(c.loglik() == 0.0);
  CHECK(c.parameters() == 1);

  const std::vector<double> bad{1, 0, 3};
  for (Family family : {Family::Exponential, Family::Weibull, Family::LogNormal}) {
    try {
      fit(family, Component::Event, bad, all_events);
      FAIL("expected InvalidTime");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidTime);
    }
  }
  const std::vector<double> signed_times{-1, 0, 3, 4};
  const std::vector<std::uint8_t> ev{1, 1, 0, 1};
  CHECK_NOTHROW(fit(Family::Normal, Component::Event, signed_times, ev));
  CHECK(!parse_family("gamma"));
  CHECK(parse_family("weibull") == Family::Weibull);
}

TEST_CASE("refitting halves never lowers the likelihood") {
  Philox4x32 rng(12);
  for (Family family : kFamilies) {
    const auto s = fixture::sample(family, 100, 0.3, rng);
    const std::span<const double> t(s.time);
    const std::span<const std::uint8_t> e(s.event);
    const double whole = fit(family, Component::Event, t, e).loglik;
    const double halves = fit(family, Component::Event, t.first(50), e.first(50)).loglik +
                          fit(family, Component::Event, t.subspan(50), e.subspan(50)).loglik;
    CHECK(halves >= whole - 1e-8);
  }
}
