#include "survcart/split.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "survcart/error.hpp"
#include "survcart/km.hpp"
#include "survcart/stability.hpp"

namespace survcart {

namespace {

constexpr double kTieTolerance = 1e-12;

bool strictly_larger(double a, double b) noexcept {
  return std::fabs(a) > std::fabs(b) + kTieTolerance * std::max(1.0, std::fabs(b));
}

}  // namespace

LogRankResult logrank(std::span<const double> time, std::span<const std::uint8_t> event,
                      std::span<const std::uint8_t> group) {
  if (time.size() != event.size() || time.size() != group.size()) {
    throw Error(ErrorCode::SchemaMismatch, "log-rank inputs differ in length");
  }
  std::size_t n1 = 0;
  for (auto g : group) n1 += g ? 1 : 0;
  if (n1 == 0 || n1 == group.size()) {
    throw Error(ErrorCode::EmptyGroup, "log-rank test needs two nonempty groups");
  }
  std::vector<std::size_t> order(time.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  LogRankResult r;
  double at_risk = static_cast<double>(time.size());
  double at_risk1 = static_cast<double>(n1);
  bool any_event = false;
  std::size_t k = 0;
  while (k < order.size()) {
    const double t = time[order[k]];
    double d = 0.0, d1 = 0.0, removed = 0.0, removed1 = 0.0;
    for (; k < order.size() && time[order[k]] == t; ++k) {
      const std::size_t i = order[k];
      const bool g1 = group[i] != 0;
      removed += 1.0;
      removed1 += g1 ? 1.0 : 0.0;
      if (event[i]) {
        d += 1.0;
        d1 += g1 ? 1.0 : 0.0;
      }
    }
    if (d > 0.0) {
      any_event = true;
      const double frac = at_risk1 / at_risk;
      r.observed += d1;
      r.expected += d * frac;
      if (at_risk > 1.0) r.variance += d * frac * (1.0 - frac) * (at_risk - d) / (at_risk - 1.0);
    }
    at_risk -= removed;
    at_risk1 -= removed1;
  }
  if (!any_event) {
    r.no_events = true;
    return r;
  }
  r.statistic = r.variance > 0.0 ? (r.observed - r.expected) / std::sqrt(r.variance) : 0.0;
  return r;
}

LogRankScan logrank_scan(std::span<const double> time, std::span<const std::uint8_t> event,
                         std::span<const double> x) {
  if (time.size() != event.size() || time.size() != x.size()) {
    throw Error(ErrorCode::SchemaMismatch, "log-rank scan inputs differ in length");
  }
  const auto by_x = order_by(x);
  LogRankScan scan;
  scan.n = by_x.size();

  // Distinct event times with risk-set sizes, over the non-missing subjects.
  std::vector<double> event_times;
  for (std::size_t i : by_x) {
    if (event[i]) event_times.push_back(time[i]);
  }
  std::sort(event_times.begin(), event_times.end());
  event_times.erase(std::unique(event_times.begin(), event_times.end()), event_times.end());
  const std::size_t k_times = event_times.size();
  scan.no_events = k_times == 0;

  std::vector<double> n_risk(k_times, 0.0), n_event(k_times, 0.0);
  std::vector<std::size_t> reach(time.size(), 0);  // number of event times <= t_i
  for (std::size_t i : by_x) {
    const auto up = std::upper_bound(event_times.begin(), event_times.end(), time[i]);
    reach[i] = static_cast<std::size_t>(up - event_times.begin());
    for (std::size_t j = 0; j < reach[i]; ++j) n_risk[j] += 1.0;
    if (event[i]) n_event[reach[i] - 1] += 1.0;
  }
  // Nelson-Aalen increments and hypergeometric weights per event time.
  std::vector<double> hazard(k_times), weight(k_times);
  for (std::size_t j = 0; j < k_times; ++j) {
    hazard[j] = n_event[j] / n_risk[j];
    weight[j] = n_risk[j] > 1.0
                    ? n_event[j] * (n_risk[j] - n_event[j]) / (n_risk[j] - 1.0) / (n_risk[j] * n_risk[j])
                    : 0.0;
  }
  std::vector<double> cum_hazard(k_times + 1, 0.0);
  for (std::size_t j = 0; j < k_times; ++j) cum_hazard[j + 1] = cum_hazard[j] + hazard[j];

  // Moving subject i to the left adds delta_i - H(t_i) to O - E and updates
  // V = sum_j w_j a_j (n_j - a_j) with a_j the left-group risk-set count.
  // `mixed` counts, exactly, the weighted event times whose risk set is split
  // across both sides; when it is zero the variance is zero and the rounded
  // incremental sums are noise.
  std::vector<double> left_risk(k_times, 0.0);
  double o_minus_e = 0.0, var = 0.0;
  std::size_t mixed = 0;
  std::size_t k = 0;
  while (k < by_x.size()) {
    const double v = x[by_x[k]];
    for (; k < by_x.size() && x[by_x[k]] == v; ++k) {
      const std::size_t i = by_x[k];
      o_minus_e += (event[i] ? 1.0 : 0.0) - cum_hazard[reach[i]];
      for (std::size_t j = 0; j < reach[i]; ++j) {
        var += weight[j] * (n_risk[j] - 2.0 * left_risk[j] - 1.0);
        if (weight[j] > 0.0) {
          if (left_risk[j] == 0.0) ++mixed;
          if (left_risk[j] + 1.0 == n_risk[j]) --mixed;
        }
        left_risk[j] += 1.0;
      }
    }
    if (k == by_x.size()) break;
    scan.cutpoints.push_back(0.5 * (v + x[by_x[k]]));
    scan.left_n.push_back(k);
    scan.statistic.push_back(mixed > 0 && var > 0.0 ? o_minus_e / std::sqrt(var) : 0.0);
  }
  return scan;
}

SplitSearch search_splits(const SurvivalDataset& node_data, const std::string& variable,
                          Component mode, std::size_t minbucket) {
  const CovariateColumn& column = node_data.covariate(variable);
  SplitSearch out;

  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < node_data.size(); ++i) {
    if (!column.is_missing(i)) rows.push_back(i);
  }
  std::vector<double> time, x;
  std::vector<std::uint8_t> event;
  for (std::size_t i : rows) {
    time.push_back(node_data.time()[i]);
    const bool ev = node_data.event()[i] != 0;
    event.push_back((mode == Component::Event ? ev : !ev) ? 1 : 0);
    x.push_back(column.values[i]);
  }
  const std::size_t n = rows.size();
  auto admissible = [&](std::size_t left) { return left >= minbucket && n - left >= minbucket; };

  if (column.meta.kind == CovariateKind::Continuous) {
    const auto scan = logrank_scan(time, event, x);
    if (scan.cutpoints.empty()) {
      out.reason = "variable has fewer than two distinct values";
      return out;
    }
    if (scan.no_events) {
      out.reason = "no events in node for this mode";
      return out;
    }
    for (std::size_t g = 0; g < scan.cutpoints.size(); ++g) {
      if (!admissible(scan.left_n[g])) continue;
      SplitCandidate c;
      c.variable = variable;
      c.kind = CovariateKind::Continuous;
      c.cutpoint = scan.cutpoints[g];
      c.left_n = scan.left_n[g];
      c.right_n = n - scan.left_n[g];
      c.lr = scan.statistic[g];
      out.candidates.push_back(std::move(c));
    }
  } else {
    std::map<std::size_t, std::vector<std::size_t>> by_level;
    for (std::size_t k = 0; k < n; ++k) by_level[static_cast<std::size_t>(x[k])].push_back(k);
    if (by_level.size() < 2) {
      out.reason = "variable has fewer than two distinct values";
      return out;
    }
    if (std::none_of(event.begin(), event.end(), [](std::uint8_t e) { return e != 0; })) {
      out.reason = "no events in node for this mode";
      return out;
    }
    std::vector<std::size_t> level_order;
    for (const auto& [level, members] : by_level) level_order.push_back(level);
    if (level_order.size() > 2) {
      std::map<std::size_t, double> median;
      for (const auto& [level, members] : by_level) {
        std::vector<double> t;
        std::vector<std::uint8_t> e;
        for (std::size_t k : members) {
          t.push_back(time[k]);
          e.push_back(event[k]);
        }
        median[level] = km_median(km_fit(t, e)).value_or(std::numeric_limits<double>::infinity());
      }
      std::stable_sort(level_order.begin(), level_order.end(),
                       [&](std::size_t a, std::size_t b) { return median[a] < median[b]; });
    }
    std::vector<std::uint8_t> group(n, 0);
    std::size_t left = 0;
    for (std::size_t j = 0; j + 1 < level_order.size(); ++j) {
      for (std::size_t k : by_level[level_order[j]]) group[k] = 1;
      left += by_level[level_order[j]].size();
      if (!admissible(left)) continue;
      SplitCandidate c;
      c.variable = variable;
      c.kind = CovariateKind::Categorical;
      for (std::size_t q = 0; q <= j; ++q) c.left_levels.push_back(column.levels[level_order[q]]);
      std::sort(c.left_levels.begin(), c.left_levels.end());
      c.left_n = left;
      c.right_n = n - left;
      c.lr = logrank(time, event, group).statistic;
      out.candidates.push_back(std::move(c));
    }
  }

  if (out.candidates.empty()) {
    out.reason = "no cutpoint leaves minbucket subjects on both sides";
    return out;
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < out.candidates.size(); ++k) {
    if (strictly_larger(out.candidates[k].lr, out.candidates[best].lr)) best = k;
  }
  out.best = best;
  return out;
}

std::optional<SplitCandidate> best_split(const SurvivalDataset& node_data,
                                         const std::string& variable, Component mode,
                                         std::size_t minbucket) {
  auto search = search_splits(node_data, variable, mode, minbucket);
  if (!search.best) return std::nullopt;
  return search.candidates[*search.best];
}

std::vector<SplitCandidate> ranked_candidates(const SplitSearch& search) {
  std::vector<SplitCandidate> out;
  if (!search.best) return out;
  out.reserve(search.candidates.size());
  out.push_back(search.candidates[*search.best]);
  std::vector<std::size_t> rest;
  for (std::size_t k = 0; k < search.candidates.size(); ++k) {
    if (k != *search.best) rest.push_back(k);
  }
  std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
    return std::fabs(search.candidates[a].lr) > std::fabs(search.candidates[b].lr);
  });
  for (std::size_t k : rest) out.push_back(search.candidates[k]);
  return out;
}

}  // namespace survcart
