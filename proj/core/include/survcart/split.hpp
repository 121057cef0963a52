#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survcart/dataset.hpp"
#include "survcart/model.hpp"

namespace survcart {

struct LogRankResult {
  double statistic = 0.0;  ///< (O - E) / sqrt(V) for group 1
  double observed = 0.0;
  double expected = 0.0;
  double variance = 0.0;
  bool no_events = false;
};

/// Standardized two-sample log-rank statistic with the hypergeometric
/// variance at tied event times. `group` is 1 for group one, 0 otherwise; the
/// statistic is positive when group one has more events than expected.
/// Throws EmptyGroup. With no events the statistic is 0 and `no_events` set.
LogRankResult logrank(std::span<const double> time, std::span<const std::uint8_t> event,
                      std::span<const std::uint8_t> group);

/// Signed log-rank statistic (left group = x <= c) at every midpoint between
/// consecutive distinct values of `x`, updated incrementally as subjects
/// cross the cut. NaN covariate values are ignored.
struct LogRankScan {
  std::vector<double> cutpoints;
  std::vector<std::size_t> left_n;
  std::vector<double> statistic;
  std::size_t n = 0;
  bool no_events = false;
};

LogRankScan logrank_scan(std::span<const double> time, std::span<const std::uint8_t> event,
                         std::span<const double> x);

struct SplitCandidate {
  std::string variable;
  CovariateKind kind = CovariateKind::Continuous;
  double cutpoint = 0.0;                 ///< continuous: left iff x <= cutpoint
  std::vector<std::string> left_levels;  ///< categorical: left iff level in set
  std::size_t left_n = 0;
  std::size_t right_n = 0;
  double lr = 0.0;  ///< signed statistic; selection uses |lr|
};

struct SplitSearch {
  std::vector<SplitCandidate> candidates;  ///< admissible, in scan order
  std::optional<std::size_t> best;         ///< index into candidates
  std::string reason;                      ///< set when no candidate is selected
};

/// Enumerates admissible cutpoints for `variable` in the given mode
/// (Censor flips the event indicator first) and picks the one maximizing
/// |LR|, with ties going to the first candidate in scan order.
SplitSearch search_splits(const SurvivalDataset& node_data, const std::string& variable,
                          Component mode, std::size_t minbucket);

std::optional<SplitCandidate> best_split(const SurvivalDataset& node_data,
                                         const std::string& variable, Component mode,
                                         std::size_t minbucket);

/// Candidates ordered by decreasing |LR| with the scan-order tie-break.
std::vector<SplitCandidate> ranked_candidates(const SplitSearch& search);

}  // namespace survcart
