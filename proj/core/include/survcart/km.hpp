#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "survcart/model.hpp"

namespace survcart {

/// Product-limit curve on the grid of distinct observed times. With
/// flavor == Censor the roles of events and censorings are swapped, giving
/// the censoring-time survivor function.
struct KMCurve {
  Component flavor = Component::Event;
  std::vector<double> time;
  std::vector<double> surv;
  std::vector<std::size_t> n_risk;
  std::vector<std::size_t> n_event;

  /// S(t) as a right-continuous step function; 1 before the first grid time.
  double at(double t) const noexcept;
};

KMCurve km_fit(std::span<const double> time, std::span<const std::uint8_t> event,
               Component flavor = Component::Event);

/// Smallest grid time with S(t) <= 0.5; nullopt when the curve never gets there.
std::optional<double> km_median(const KMCurve& curve);

}  // namespace survcart
