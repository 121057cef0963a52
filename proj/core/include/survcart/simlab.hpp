#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "survcart/dataset.hpp"
#include "survcart/rng.hpp"
#include "survcart/tree.hpp"

namespace survcart {

/// i.i.d. exponential draws by inversion. Throws InvalidConfig unless rate > 0.
std::vector<double> gen_exponential(double rate, std::size_t n, Philox4x32& rng);

/// Censoring hazard giving expected censored fraction `censor_fraction`
/// against event hazard `lambda_t`: lambda_c = lambda_t c / (1 - c).
double censoring_hazard(double lambda_t, double censor_fraction);

struct SimOptions {
  unsigned threads = 1;  ///< 0 uses the hardware concurrency
};

/// A rejection fraction with its 95% Wilson score interval.
struct RateEstimate {
  std::size_t replicates = 0;
  std::size_t rejections = 0;
  std::size_t failures = 0;  ///< replicates whose model could not be fitted (not rejections)
  double rate = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

RateEstimate wilson_interval(std::size_t successes, std::size_t trials);

struct SizeDesign {
  double lambda_t = 1.0 / 20.0;
  double censoring = 0.25;  ///< expected censored fraction, in [0, 1)
  std::size_t n = 1000;
  std::size_t replicates = 2000;
  std::uint64_t seed = 1;
};

/// One simulated null dataset: follow-up, event flag, and covariate "x" drawn
/// U(0,10) for the first half of subjects and U(10,20) for the rest.
SurvivalDataset simulate_size_data(const SizeDesign& design, Philox4x32& rng);

/// Fraction of replicates whose event-component sup statistic exceeds the
/// 95th percentile of the Brownian-bridge supremum law.
RateEstimate run_size(const SizeDesign& design, SimOptions options = {});

struct PowerDesign {
  double lambda_t1 = 1.0 / 20.0;
  double lambda_t2 = 1.0 / 40.0;
  double lambda_c = 1.0 / 30.0;
  std::size_t n1 = 50;
  std::size_t n2 = 50;
  std::size_t replicates = 1000;
  std::uint64_t seed = 1;
};

/// Subpopulation 1 has x ~ U(0,10), subpopulation 2 has x ~ U(10,20).
SurvivalDataset simulate_power_data(const PowerDesign& design, Philox4x32& rng);
RateEstimate run_power(const PowerDesign& design, SimOptions options = {});

struct SubgroupRates {
  double lambda_t = 0.1;
  double lambda_c = 0.025;
  std::size_t n = 400;
};

/// Four subgroups on three defining covariates:
///   1: X1 = 0, X2 <= 50    2: X1 = 0, X2 > 50
///   3: X1 = 1, X3 <= 2.5   4: X1 = 1, X3 > 2.5
/// with X2 ~ U(0,100) and X3 ~ U(0,5) drawn within each subgroup's region, plus
/// nuisance X4 ~ U(0,100), X5 ~ Bernoulli(0.5), X6 uniform on 6 levels. A single
/// subgroup gives the null design with all covariates unrelated to outcome.
struct TreeDesign {
  std::vector<SubgroupRates> subgroups = default_subgroups();
  std::size_t replicates = 200;
  std::uint64_t seed = 1;

  static std::vector<SubgroupRates> default_subgroups();
};

struct SimulatedTreeData {
  SurvivalDataset data;
  GroundTruth truth;
};

SimulatedTreeData simulate_tree_data(const TreeDesign& design, Philox4x32& rng);

struct NamedConfig {
  std::string label;
  TreeConfig config;
};

/// Per-replicate record of one grown tree.
struct TreeReplicate {
  std::size_t leaves = 0;
  std::string first_split;                 ///< empty when the root is a leaf
  std::vector<std::string> second_splits;  ///< split variables of the root's children
  bool identical_to_truth = false;
  TreeMetrics metrics;
  double aic = 0.0;
};

struct TreeRecoverySummary {
  std::string label;
  std::size_t replicates = 0;
  std::map<std::size_t, std::size_t> leaf_histogram;
  std::size_t modal_leaves = 0;
  double pct_x1_first = 0.0;
  double pct_x2_first_or_second = 0.0;
  double pct_x3_first_or_second = 0.0;
  double pct_identical = 0.0;
  double median_mad_t = 0.0;
  double median_mad_c = 0.0;
  double median_perfect_mad_t = 0.0;
  double median_perfect_mad_c = 0.0;
  double median_delta_mad_t = 0.0;
  double median_delta_mad_c = 0.0;
  double median_aic = 0.0;
};

/// Every config is grown on the same simulated datasets.
std::vector<TreeRecoverySummary> run_tree_recovery(const TreeDesign& design,
                                                   const std::vector<NamedConfig>& configs,
                                                   SimOptions options = {});

/// Summarizes one replicate's tree against the four-subgroup layout.
TreeReplicate describe_replicate(const SurvTree& tree, const SimulatedTreeData& sim);

/// Runs body(r) for r in [0, n) on `threads` workers; results must be written
/// to per-replicate slots so the outcome is independent of scheduling.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body);

double median(std::vector<double> values);

// ---------------------------------------------------------------------------
// Experiment spec files
// ---------------------------------------------------------------------------

enum class Experiment { Size, Power, Tree };

/// Parsed experiment spec. Lists expand into cells: size crosses `n` with
/// `censoring`; power zips (lambda_t2, lambda_c) scenarios and crosses them with
/// zipped (n1, n2) sample sizes; tree runs every entry of `configs`.
struct ExperimentSpec {
  Experiment experiment = Experiment::Size;
  std::optional<std::uint64_t> seed;
  std::size_t replicates = 0;
  std::vector<SizeDesign> size_cells;
  std::vector<PowerDesign> power_cells;
  TreeDesign tree_design;
  std::vector<NamedConfig> tree_configs;
};

/// Throws Error(SpecParseError) naming the offending line.
ExperimentSpec parse_experiment_spec(std::istream& in);
ExperimentSpec load_experiment_spec(const std::string& path);

/// Smallest replicate count each experiment accepts.
std::size_t minimum_replicates(Experiment experiment) noexcept;

/// Parses "exp/exp", "wei/exp", "exp/na" and similar into a tree config.
NamedConfig parse_config_label(const std::string& label, const TreeConfig& base);

struct ExperimentRow {
  std::vector<std::pair<std::string, std::string>> fields;
  std::string summary;
};

/// Runs every cell; one row per cell or config.
std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec, std::uint64_t seed,
                                          std::size_t replicates, SimOptions options);

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows);

}  // namespace survcart
