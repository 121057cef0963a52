#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "survcart/dataset.hpp"
#include "survcart/model.hpp"
#include "survcart/rng.hpp"

namespace fixture {

struct TimesEvents {
  std::vector<double> time;
  std::vector<std::uint8_t> event;
};

inline double standard_normal(survcart::Philox4x32& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

/// Latent event times from `family`; each subject is censored with
/// probability `censoring`.
inline TimesEvents sample(survcart::Family family, std::size_t n, double censoring,
                          survcart::Philox4x32& rng) {
  TimesEvents out;
  std::vector<double> t(n);
  for (auto& v : t) {
    switch (family) {
      case survcart::Family::Exponential: v = rng.exponential(0.1); break;
      case survcart::Family::Weibull: v = std::pow(rng.exponential(0.02), 1.0 / 1.5); break;
      case survcart::Family::LogNormal: v = std::exp(2.0 + 0.7 * standard_normal(rng)); break;
      case survcart::Family::Normal: v = 50.0 + 10.0 * standard_normal(rng); break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    // Censored subjects are followed for a uniform fraction of their latent time.
    const bool censored = rng.bernoulli(censoring);
    const double shrink = 1.0 - rng.uniform();
    const double c = family == survcart::Family::Normal ? t[i] - 20.0 * shrink : t[i] * shrink;
    out.time.push_back(censored ? c : t[i]);
    out.event.push_back(censored ? 0 : 1);
  }
  return out;
}

inline double censored_fraction(const TimesEvents& s) {
  double c = 0;
  for (auto e : s.event) c += e ? 0 : 1;
  return c / static_cast<double>(s.event.size());
}

}  // namespace fixture
