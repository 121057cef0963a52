#include "survcart/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "survcart/error.hpp"
#include "survcart/km.hpp"
#include "survcart/split.hpp"
#include "survcart/stability.hpp"

namespace survcart {

void TreeConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "alpha must lie strictly between 0 and 1");
  }
  if (minbucket < 1) throw Error(ErrorCode::InvalidConfig, "minbucket must be at least 1");
  if (minsplit < 2 * minbucket) {
    throw Error(ErrorCode::InvalidConfig, "minsplit must be at least 2 * minbucket");
  }
}

const char* to_string(StopReason reason) noexcept {
  switch (reason) {
    case StopReason::None: return "none";
    case StopReason::TooSmall: return "TooSmall";
    case StopReason::MaxDepth: return "MaxDepth";
    case StopReason::NoTestableComponent: return "NoTestableComponent";
    case StopReason::FitFailure: return "FitFailure";
    case StopReason::NoSignificantVariable: return "NoSignificantVariable";
    case StopReason::NoAdmissibleSplit: return "NoAdmissibleSplit";
  }
  return "unknown";
}

std::optional<StopReason> parse_stop_reason(const std::string& s) {
  for (auto r : {StopReason::None, StopReason::TooSmall, StopReason::MaxDepth,
                 StopReason::NoTestableComponent, StopReason::FitFailure,
                 StopReason::NoSignificantVariable, StopReason::NoAdmissibleSplit}) {
    if (s == to_string(r)) return r;
  }
  return std::nullopt;
}

bool SplitRule::goes_left(double value) const noexcept { return value <= cutpoint; }

bool SplitRule::goes_left(const std::string& level) const {
  return std::find(left_levels.begin(), left_levels.end(), level) != left_levels.end();
}

std::string SplitRule::describe(bool left) const {
  if (kind == CovariateKind::Continuous) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", cutpoint);
    return variable + (left ? " <= " : " > ") + buf;
  }
  std::string set;
  for (std::size_t k = 0; k < left_levels.size(); ++k) {
    if (k) set += ",";
    set += left_levels[k];
  }
  return variable + (left ? " in {" : " not in {") + set + "}";
}

std::vector<std::size_t> SurvTree::leaves() const {
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    if (nodes[k].is_leaf()) out.push_back(k);
  }
  return out;
}

std::size_t SurvTree::leaf_count() const { return leaves().size(); }

const TreeNode* SurvTree::find(std::uint64_t id) const {
  for (const auto& n : nodes) {
    if (n.id == id) return &n;
  }
  return nullptr;
}

void SurvTree::refresh_likelihood() {
  std::vector<std::pair<ComponentFit, ComponentFit>> pairs;
  for (std::size_t k : leaves()) pairs.emplace_back(nodes[k].event_model, nodes[k].censor_model);
  const auto s = loglik_and_aic(pairs);
  loglik = s.loglik;
  aic = s.aic;
}

namespace {

constexpr std::size_t kDepthLimit = 62;  // keeps level-order ids inside 64 bits

class Grower {
 public:
  Grower(const SurvivalDataset& data, const TreeConfig& config, SurvTree& tree)
      : data_(data), config_(config), tree_(tree) {}

  std::size_t build(std::vector<std::size_t> subjects, std::uint64_t id, std::size_t depth);

 private:
  bool choose_split(std::size_t index, const SurvivalDataset& sub,
                    std::vector<std::size_t>& left, std::vector<std::size_t>& right);

  const SurvivalDataset& data_;
  const TreeConfig& config_;
  SurvTree& tree_;
};

std::size_t Grower::build(std::vector<std::size_t> subjects, std::uint64_t id, std::size_t depth) {
  const SurvivalDataset sub = data_.subset(subjects);
  TreeNode node;
  node.id = id;
  node.depth = depth;
  node.n = sub.size();
  node.d = sub.events();
  node.subjects = std::move(subjects);
  node.event_model = try_fit(config_.event_dist, Component::Event, sub);
  node.censor_model = try_fit(config_.censor_dist, Component::Censor, sub);
  if (node.n > 0) {
    node.km_median_event = km_median(km_fit(sub.time(), sub.event(), Component::Event));
    node.km_median_censor = km_median(km_fit(sub.time(), sub.event(), Component::Censor));
  }
  const std::size_t index = tree_.nodes.size();
  tree_.nodes.push_back(std::move(node));

  auto stop = [&](StopReason r) {
    tree_.nodes[index].stop_reason = r;
    return index;
  };
  const TreeNode& self = tree_.nodes[index];
  if (self.n < config_.minsplit) return stop(StopReason::TooSmall);
  if ((config_.max_depth && depth >= *config_.max_depth) || depth >= kDepthLimit) {
    return stop(StopReason::MaxDepth);
  }
  const bool use_censor = config_.censor_heterogeneity;
  if (self.event_model.status == FitStatus::Failed ||
      (use_censor && self.censor_model.status == FitStatus::Failed)) {
    return stop(StopReason::FitFailure);
  }
  if (!self.event_model.fitted() && !(use_censor && self.censor_model.fitted())) {
    return stop(StopReason::NoTestableComponent);
  }

  std::vector<std::size_t> left, right;
  if (!choose_split(index, sub, left, right)) return index;

  const std::size_t l = build(std::move(left), 2 * id, depth + 1);
  const std::size_t r = build(std::move(right), 2 * id + 1, depth + 1);
  tree_.nodes[index].children = std::array<std::size_t, 2>{l, r};
  return index;
}

bool Grower::choose_split(std::size_t index, const SurvivalDataset& sub,
                          std::vector<std::size_t>& left, std::vector<std::size_t>& right) {
  TreeNode& node = tree_.nodes[index];
  const std::size_t s = sub.covariate_count();
  std::vector<StabilityReport> reports;
  reports.reserve(s);
  std::vector<double> pvals, log_pvals;
  for (std::size_t j = 0; j < s; ++j) {
    reports.push_back(variable_test(sub, sub.covariate(j).meta.name, node.event_model,
                                    node.censor_model, {config_.censor_heterogeneity}));
    const bool ok = reports.back().testable;
    pvals.push_back(ok ? reports.back().variable_p : 1.0);
    log_pvals.push_back(ok ? reports.back().log_variable_p : 0.0);
  }
  if (s == 0) {
    node.stop_reason = StopReason::NoSignificantVariable;
    return false;
  }
  const auto adjusted = hochberg(pvals);
  const auto adjusted_log = hochberg_log(log_pvals);
  node.screening.clear();
  for (std::size_t j = 0; j < s; ++j) {
    node.screening.push_back({reports[j].variable, reports[j].testable, reports[j].event.p,
                              reports[j].censor.p, pvals[j], adjusted[j]});
  }
  // Ranked in log scale so that p-values underflowing to 0 stay ordered.
  std::size_t chosen = 0;
  for (std::size_t j = 1; j < s; ++j) {
    const bool better =
        adjusted_log[j] < adjusted_log[chosen] ||
        (adjusted_log[j] == adjusted_log[chosen] && log_pvals[j] < log_pvals[chosen]);
    if (better) chosen = j;
  }
  if (adjusted[chosen] > config_.alpha) {
    node.stop_reason = StopReason::NoSignificantVariable;
    return false;
  }

  const StabilityReport& rep = reports[chosen];
  const Component mode = rep.more_heterogeneous;
  const auto search = search_splits(sub, rep.variable, mode, config_.minbucket);
  const CovariateColumn& column = sub.covariate(chosen);
  for (const auto& cand : ranked_candidates(search)) {
    SplitRule rule;
    rule.variable = rep.variable;
    rule.variable_index = chosen;
    rule.kind = column.meta.kind;
    rule.cutpoint = cand.cutpoint;
    rule.left_levels = cand.left_levels;
    rule.mode = mode;
    rule.lr = cand.lr;
    rule.variable_p = adjusted[chosen];
    rule.raw_p = pvals[chosen];
    rule.missing_left = cand.left_n >= cand.right_n;

    left.clear();
    right.clear();
    for (std::size_t k = 0; k < sub.size(); ++k) {
      bool go_left;
      if (column.is_missing(k)) {
        go_left = rule.missing_left;
      } else if (rule.kind == CovariateKind::Continuous) {
        go_left = rule.goes_left(column.values[k]);
      } else {
        go_left = rule.goes_left(column.levels[static_cast<std::size_t>(column.values[k])]);
      }
      (go_left ? left : right).push_back(node.subjects[k]);
    }
    // A child whose component models cannot be fitted vetoes this cutpoint.
    bool vetoed = false;
    for (const auto* side : {&left, &right}) {
      const SurvivalDataset child = data_.subset(*side);
      if (try_fit(config_.event_dist, Component::Event, child).status == FitStatus::Failed ||
          try_fit(config_.censor_dist, Component::Censor, child).status == FitStatus::Failed) {
        vetoed = true;
        break;
      }
    }
    if (vetoed) continue;
    node.split = std::move(rule);
    return true;
  }
  node.stop_reason = StopReason::NoAdmissibleSplit;
  return false;
}

}  // namespace

SurvTree grow(const SurvivalDataset& data, const TreeConfig& config) {
  config.validate();
  if (data.size() == 0) throw Error(ErrorCode::EmptyDataset, "cannot grow a tree on no data");
  SurvTree tree;
  tree.config = config;
  tree.schema = data.meta();
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  Grower(data, config, tree).build(std::move(all), 1, 0);
  tree.refresh_likelihood();

  // Likelihood trace in the order splits were made (depth first).
  const std::size_t root_params =
      parameter_count(config.event_dist) + parameter_count(config.censor_dist);
  double ll = tree.root().loglik();
  std::size_t params = root_params;
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    const auto& [l, r] = *node.children;
    SplitImprovement step;
    step.node_id = node.id;
    step.loglik_before = node.loglik();
    step.loglik_after = tree.nodes[l].loglik() + tree.nodes[r].loglik();
    ll += step.loglik_after - step.loglik_before;
    params += root_params;
    step.tree_aic = -2.0 * ll + 2.0 * static_cast<double>(params);
    tree.trace.push_back(step);
  }
  return tree;
}

std::uint64_t predict_node(const SurvTree& tree, std::span<const CovariateValue> covariates) {
  if (covariates.size() != tree.schema.size()) {
    throw Error(ErrorCode::SchemaMismatch, "covariate vector has " +
                                               std::to_string(covariates.size()) +
                                               " entries, tree schema has " +
                                               std::to_string(tree.schema.size()));
  }
  std::size_t k = 0;
  while (!tree.nodes[k].is_leaf()) {
    const TreeNode& node = tree.nodes[k];
    const SplitRule& rule = *node.split;
    const CovariateValue& v = covariates[rule.variable_index];
    if (std::holds_alternative<std::monostate>(v)) {
      throw Error(ErrorCode::MissingValue, "missing value for split variable '" + rule.variable + "'");
    }
    bool left;
    if (rule.kind == CovariateKind::Continuous) {
      if (!std::holds_alternative<double>(v)) {
        throw Error(ErrorCode::SchemaMismatch, "variable '" + rule.variable + "' expects a number");
      }
      left = rule.goes_left(std::get<double>(v));
    } else if (std::holds_alternative<std::string>(v)) {
      left = rule.goes_left(std::get<std::string>(v));
    } else {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(v));
      left = rule.goes_left(std::string(buf));
    }
    k = (*node.children)[left ? 0 : 1];
  }
  return tree.nodes[k].id;
}

std::vector<std::size_t> leaf_of_subjects(const SurvTree& tree, std::size_t n_subjects) {
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> out(n_subjects, unset);
  for (std::size_t k : tree.leaves()) {
    for (std::size_t s : tree.nodes[k].subjects) {
      if (s >= n_subjects) throw Error(ErrorCode::SchemaMismatch, "subject index out of range");
      out[s] = k;
    }
  }
  if (std::find(out.begin(), out.end(), unset) != out.end()) {
    throw Error(ErrorCode::SchemaMismatch, "tree leaves do not cover every subject");
  }
  return out;
}

namespace {

struct RateEstimate {
  double event = 0.0;
  double censor = 0.0;
};

RateEstimate exponential_rates(const SurvivalDataset& data, std::span<const std::size_t> rows) {
  double d = 0.0, s = 0.0;
  for (std::size_t i : rows) {
    d += data.event()[i] ? 1.0 : 0.0;
    s += data.time()[i];
  }
  const double n = static_cast<double>(rows.size());
  return {d / s, (n - d) / s};
}

// Subgroup-averaged relative absolute deviation of per-subject estimates.
std::pair<double, double> mad(const GroundTruth& truth, std::span<const RateEstimate> per_subject) {
  const std::size_t k = truth.lambda_t.size();
  std::vector<double> sum_t(k, 0.0), sum_c(k, 0.0), count(k, 0.0);
  for (std::size_t i = 0; i < per_subject.size(); ++i) {
    const std::size_t g = truth.subgroup[i];
    sum_t[g] += std::fabs(truth.lambda_t[g] - per_subject[i].event) / truth.lambda_t[g];
    sum_c[g] += std::fabs(truth.lambda_c[g] - per_subject[i].censor) / truth.lambda_c[g];
    count[g] += 1.0;
  }
  double mt = 0.0, mc = 0.0, groups = 0.0;
  for (std::size_t g = 0; g < k; ++g) {
    if (count[g] == 0.0) continue;
    mt += sum_t[g] / count[g];
    mc += sum_c[g] / count[g];
    groups += 1.0;
  }
  return {mt / groups, mc / groups};
}

}  // namespace

TreeMetrics tree_metrics(const SurvTree& tree, const SurvivalDataset& data,
                         const GroundTruth* truth) {
  TreeMetrics m;
  m.leaves = tree.leaf_count();
  if (!truth) return m;
  const std::size_t n = data.size();
  const std::size_t k = truth->lambda_t.size();
  if (truth->subgroup.size() != n || truth->lambda_c.size() != k || k == 0 ||
      std::any_of(truth->subgroup.begin(), truth->subgroup.end(),
                  [&](std::size_t g) { return g >= k; })) {
    throw Error(ErrorCode::TruthSchemaMismatch, "ground truth does not match the dataset");
  }
  if (tree.root().n != n) {
    throw Error(ErrorCode::TruthSchemaMismatch, "tree was not grown on this dataset");
  }

  std::vector<RateEstimate> fitted(n), perfect(n);
  for (std::size_t leaf : tree.leaves()) {
    const auto& rows = tree.nodes[leaf].subjects;
    const auto est = exponential_rates(data, rows);
    for (std::size_t i : rows) fitted[i] = est;
  }
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < n; ++i) members[truth->subgroup[i]].push_back(i);
  for (const auto& rows : members) {
    if (rows.empty()) continue;
    const auto est = exponential_rates(data, rows);
    for (std::size_t i : rows) perfect[i] = est;
  }
  std::tie(m.mad_t, m.mad_c) = mad(*truth, fitted);
  std::tie(m.perfect_mad_t, m.perfect_mad_c) = mad(*truth, perfect);
  m.pct_diff_t = 100.0 * (m.mad_t - m.perfect_mad_t) / m.perfect_mad_t;
  m.pct_diff_c = 100.0 * (m.mad_c - m.perfect_mad_c) / m.perfect_mad_c;
  m.has_truth = true;
  return m;
}

}  // namespace survcart
