#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "survcart/dataset.hpp"
#include "survcart/model.hpp"

namespace survcart {

struct TreeConfig {
  double alpha = 0.05;          ///< level for the multiplicity-adjusted variable p-value
  std::size_t minsplit = 20;    ///< nodes smaller than this are not split
  std::size_t minbucket = 7;    ///< smallest admissible child
  Family event_dist = Family::Exponential;
  Family censor_dist = Family::Exponential;
  bool censor_heterogeneity = true;  ///< false ignores censoring-time heterogeneity
  std::optional<std::size_t> max_depth;

  /// Throws Error(InvalidConfig) when the constraints do not hold.
  void validate() const;
};

enum class StopReason {
  None,
  TooSmall,
  MaxDepth,
  NoTestableComponent,
  FitFailure,
  NoSignificantVariable,
  NoAdmissibleSplit,
};

const char* to_string(StopReason reason) noexcept;
std::optional<StopReason> parse_stop_reason(const std::string& s);

struct SplitRule {
  std::string variable;
  std::size_t variable_index = 0;
  CovariateKind kind = CovariateKind::Continuous;
  double cutpoint = 0.0;
  std::vector<std::string> left_levels;
  Component mode = Component::Event;
  double lr = 0.0;
  double variable_p = 1.0;  ///< adjusted across the candidate variables
  double raw_p = 1.0;       ///< the variable's own p before that adjustment
  bool missing_left = false;  ///< side taken in training by subjects missing the variable

  /// Routing for a present value. Categorical levels outside the left set go right.
  bool goes_left(double value) const noexcept;
  bool goes_left(const std::string& level) const;
  std::string describe(bool left) const;
};

struct VariableScreen {
  std::string variable;
  bool testable = false;
  double event_p = 1.0;
  double censor_p = 1.0;
  double p = 1.0;
  double adjusted_p = 1.0;
};

struct TreeNode {
  std::uint64_t id = 1;
  std::size_t depth = 0;
  std::vector<std::size_t> subjects;  ///< row indices into the training data
  std::size_t n = 0;
  std::size_t d = 0;
  ComponentFit event_model;
  ComponentFit censor_model;
  std::optional<double> km_median_event;
  std::optional<double> km_median_censor;
  std::optional<SplitRule> split;
  std::optional<std::array<std::size_t, 2>> children;  ///< indices into SurvTree::nodes
  StopReason stop_reason = StopReason::None;
  std::vector<VariableScreen> screening;

  bool is_leaf() const noexcept { return !children.has_value(); }
  double loglik() const noexcept { return event_model.loglik() + censor_model.loglik(); }
};

struct SplitImprovement {
  std::uint64_t node_id = 0;
  double loglik_before = 0.0;  ///< node's own event + censor log-likelihood
  double loglik_after = 0.0;   ///< sum over the two children
  double tree_aic = 0.0;       ///< AIC of the whole tree right after this split
};

/// A grown tree. Nodes are stored in depth-first order with the root first;
/// node ids are level-order (root 1, children 2k and 2k+1).
struct SurvTree {
  TreeConfig config;
  std::vector<CovariateMeta> schema;
  std::vector<TreeNode> nodes;
  double loglik = 0.0;
  double aic = 0.0;
  std::vector<SplitImprovement> trace;

  const TreeNode& root() const { return nodes.front(); }
  std::vector<std::size_t> leaves() const;
  std::size_t leaf_count() const;
  const TreeNode* find(std::uint64_t id) const;

  /// Recomputes loglik/AIC from the current leaves.
  void refresh_likelihood();
};

SurvTree grow(const SurvivalDataset& data, const TreeConfig& config);

/// Routes a covariate vector (schema order) to a leaf id. Throws MissingValue
/// when a split variable is missing and SchemaMismatch on arity or type errors.
std::uint64_t predict_node(const SurvTree& tree, std::span<const CovariateValue> covariates);

/// The leaf (index into nodes) holding each training subject.
std::vector<std::size_t> leaf_of_subjects(const SurvTree& tree, std::size_t n_subjects);

/// Generating truth for a simulated dataset: subgroup per subject and the
/// exponential (event, censoring) rates of each subgroup.
struct GroundTruth {
  std::vector<std::size_t> subgroup;
  std::vector<double> lambda_t;
  std::vector<double> lambda_c;
};

struct TreeMetrics {
  std::size_t leaves = 0;
  bool has_truth = false;
  double mad_t = 0.0;
  double mad_c = 0.0;
  double perfect_mad_t = 0.0;
  double perfect_mad_c = 0.0;
  double pct_diff_t = 0.0;  ///< 100 (MAD_fit - MAD_perfect) / MAD_perfect
  double pct_diff_c = 0.0;
};

/// Leaf count, plus MAD metrics when `truth` is given. Leaf rate estimates are
/// the exponential MLEs D/S_T and (N-D)/S_T of each leaf.
TreeMetrics tree_metrics(const SurvTree& tree, const SurvivalDataset& data,
                         const GroundTruth* truth = nullptr);

}  // namespace survcart
