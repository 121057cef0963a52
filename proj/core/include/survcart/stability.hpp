#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survcart/dataset.hpp"
#include "survcart/model.hpp"

namespace survcart {

// ---------------------------------------------------------------------------
// Limiting distribution of the supremum of a standard Brownian bridge
// ---------------------------------------------------------------------------

/// F_D(x) = 1 + 2 sum_{l>=1} (-1)^l exp(-2 l^2 x^2); 0 for x <= 0.
double fd_cdf(double x) noexcept;
/// 1 - F_D(x), computed directly so that tiny tail probabilities keep precision.
double fd_sf(double x) noexcept;
/// Inverse of fd_cdf by bisection; p in (0, 1).
double fd_quantile(double p);

/// log(1 - F_D(x)), finite far beyond the range where fd_sf underflows.
double fd_log_sf(double x) noexcept;

/// Upper-tail chi-square probability.
double chisq_sf(double statistic, double df);
/// Natural log of chisq_sf, finite where the probability itself underflows.
double chisq_log_sf(double statistic, double df);

/// Step-up Hochberg adjusted p-values, returned in input order.
std::vector<double> hochberg(std::span<const double> pvals);
/// Hochberg adjustment on log p-values (all <= 0); result in log scale.
std::vector<double> hochberg_log(std::span<const double> log_pvals);

// ---------------------------------------------------------------------------
// Score-process tests
// ---------------------------------------------------------------------------

/// Subjects sorted ascending by a covariate and grouped by distinct value.
struct GroupedScores {
  std::vector<double> cutpoints;         ///< distinct sorted values c_(1) < ... < c_(G)
  std::vector<std::size_t> group_sizes;  ///< m_g
  std::vector<std::size_t> cumulative;   ///< M_g; M_G = N

  std::size_t groups() const noexcept { return cutpoints.size(); }
  std::size_t total() const noexcept { return cumulative.empty() ? 0 : cumulative.back(); }
};

/// Groups an already sorted covariate vector by distinct value.
GroupedScores group_sorted(std::span<const double> sorted_x);

/// Stable ascending order of `x` (NaN entries excluded).
std::vector<std::size_t> order_by(std::span<const double> x);

struct CategoricalResult {
  double statistic = 0.0;
  std::size_t df = 0;
  double p = 1.0;
  std::size_t groups = 0;
  std::size_t smallest_group = 0;
};

/// Sum over groups of s_g' [m_g J]^{-1} s_g with s_g the group score sum.
/// Throws TooFewGroups (G < 2) or SingularInformation.
CategoricalResult test_categorical(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& info,
                                   std::span<const int> groups);

struct ParameterResult {
  std::size_t parameter = 0;
  double statistic = 0.0;  ///< D = max_g |M_N(t_g)| for this parameter
  double p = 1.0;          ///< 1 - F_D(D)
  double log_p = 0.0;
};

/// Per-parameter supremum statistics of the standardized cumulative score
/// process N^{-1/2} J^{-1/2} sum_{i <= M_g} u_i evaluated at g = 1..G-1.
/// `scores` rows must be in the order that produced `groups`.
std::vector<ParameterResult> test_continuous(const Eigen::MatrixXd& scores,
                                             const Eigen::MatrixXd& info,
                                             const GroupedScores& groups);

/// Exponential-family closed forms, used as cross-checks and in the simulation
/// harness. `groups` are integer category labels.
double exponential_chisq(Component component, std::span<const double> time,
                         std::span<const std::uint8_t> event, std::span<const int> groups);
/// D(lambda) for a covariate; subjects need not be sorted.
double exponential_sup_statistic(Component component, std::span<const double> time,
                                 std::span<const std::uint8_t> event, std::span<const double> x);

// ---------------------------------------------------------------------------
// Per-variable report
// ---------------------------------------------------------------------------

enum class ComponentTestStatus { Tested, Degenerate, Skipped, NotTestable, FitFailure };

const char* to_string(ComponentTestStatus status) noexcept;

struct ComponentTest {
  Component component = Component::Event;
  ComponentTestStatus status = ComponentTestStatus::Skipped;
  /// Categorical: one joint statistic with its df. Continuous: one entry per
  /// parameter, with `adjusted` holding the within-component Hochberg values.
  std::vector<ParameterResult> parameters;
  std::vector<double> adjusted;
  std::size_t df = 0;
  double p = 1.0;           ///< component p before the cross-component adjustment
  double adjusted_p = 1.0;  ///< after Hochberg across the tested components
  double log_p = 0.0;
  double log_adjusted_p = 0.0;
};

struct StabilityReport {
  std::string variable;
  CovariateKind kind = CovariateKind::Continuous;
  bool testable = true;
  std::string note;
  std::size_t n_tested = 0;
  std::size_t groups = 0;
  bool small_groups = false;  ///< some category has fewer than 5 subjects
  ComponentTest event;
  ComponentTest censor;
  double variable_p = 1.0;
  double log_variable_p = 0.0;  ///< ranks variables whose p-values underflow
  Component more_heterogeneous = Component::Event;
};

struct VariableTestOptions {
  bool include_censor = true;
};

/// Runs the instability test for one partitioning variable at a node, for the
/// event and censoring components. Subjects with a missing value for the
/// variable are excluded and the component models are refit without them.
StabilityReport variable_test(const SurvivalDataset& node_data, const std::string& variable,
                              const ComponentFit& event_model, const ComponentFit& censor_model,
                              VariableTestOptions options = {});

}  // namespace survcart
