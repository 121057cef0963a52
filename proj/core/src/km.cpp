#include "survcart/km.hpp"

#include <algorithm>
#include <numeric>

#include "survcart/error.hpp"

namespace survcart {

double KMCurve::at(double t) const noexcept {
  auto it = std::upper_bound(time.begin(), time.end(), t);
  if (it == time.begin()) return 1.0;
  return surv[static_cast<std::size_t>(it - time.begin()) - 1];
}

KMCurve km_fit(std::span<const double> time, std::span<const std::uint8_t> event,
               Component flavor) {
  if (time.empty()) throw Error(ErrorCode::EmptyInput, "Kaplan-Meier needs at least one subject");
  if (time.size() != event.size()) {
    throw Error(ErrorCode::SchemaMismatch, "time and event vectors differ in length");
  }
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  KMCurve c;
  c.flavor = flavor;
  std::size_t at_risk = time.size();
  double s = 1.0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double t = time[order[k]];
    std::size_t removed = 0, events = 0;
    for (; k < order.size() && time[order[k]] == t; ++k) {
      const bool ev = event[order[k]] != 0;
      events += (flavor == Component::Event ? ev : !ev) ? 1 : 0;
      ++removed;
    }
    if (events > 0) {
      s *= 1.0 - static_cast<double>(events) / static_cast<double>(at_risk);
    }
    c.time.push_back(t);
    c.surv.push_back(s);
    c.n_risk.push_back(at_risk);
    c.n_event.push_back(events);
    at_risk -= removed;
  }
  return c;
}

std::optional<double> km_median(const KMCurve& curve) {
  // Products such as (3/4)(2/3) may round just above one half.
  constexpr double kHalf = 0.5 + 1e-12;
  for (std::size_t j = 0; j < curve.time.size(); ++j) {
    if (curve.surv[j] <= kHalf) return curve.time[j];
  }
  return std::nullopt;
}

}  // namespace survcart
