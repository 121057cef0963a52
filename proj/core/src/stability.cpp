#include "survcart/stability.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "survcart/error.hpp"

namespace survcart {

namespace {

// Below this point the theta-function form converges faster than the
// alternating series.
constexpr double kSeriesSwitch = 1.18;
// Probabilities below this are carried in log scale.
constexpr double kTinyProbability = 1e-250;

// sqrt(2 pi)/x sum_k exp(-(2k-1)^2 pi^2 / (8 x^2)), the dual form of F_D.
double fd_cdf_small(double x) noexcept {
  const double a = std::numbers::pi * std::numbers::pi / (8.0 * x * x);
  double sum = 0.0;
  for (int k = 1; k < 1000; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double term = std::exp(-a * odd * odd);
    sum += term;
    if (term < 1e-17 * sum || term == 0.0) break;
  }
  return std::sqrt(2.0 * std::numbers::pi) / x * sum;
}

// 2 sum_{l>=1} (-1)^{l-1} exp(-2 l^2 x^2).
double fd_sf_large(double x) noexcept {
  double sum = 0.0;
  for (int l = 1; l <= 1000; ++l) {
    const double term = std::exp(-2.0 * l * l * x * x);
    sum += (l % 2 == 1) ? term : -term;
    if (term < 1e-17 * std::fabs(sum) || term < 1e-300) break;
  }
  return 2.0 * sum;
}

}  // namespace

double fd_cdf(double x) noexcept {
  if (!(x > 0.0)) return 0.0;
  if (x < kSeriesSwitch) return std::clamp(fd_cdf_small(x), 0.0, 1.0);
  return std::clamp(1.0 - fd_sf_large(x), 0.0, 1.0);
}

double fd_sf(double x) noexcept {
  if (!(x > 0.0)) return 1.0;
  if (x < kSeriesSwitch) return std::clamp(1.0 - fd_cdf_small(x), 0.0, 1.0);
  return std::clamp(fd_sf_large(x), 0.0, 1.0);
}

double fd_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "fd_quantile requires p in (0, 1)");
  }
  double lo = 0.0, hi = 20.0;
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (fd_cdf(mid) < p) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double fd_log_sf(double x) noexcept {
  const double p = fd_sf(x);
  if (p > kTinyProbability) return std::log(p);
  return std::log(2.0) - 2.0 * x * x;
}

double chisq_sf(double statistic, double df) {
  if (!(statistic > 0.0)) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * statistic);
}

double chisq_log_sf(double statistic, double df) {
  const double p = chisq_sf(statistic, df);
  if (p > kTinyProbability) return std::log(p);
  // Asymptotic expansion of the upper incomplete gamma function.
  const double a = 0.5 * df, x = 0.5 * statistic;
  return (a - 1.0) * std::log(x) - x - std::lgamma(a) +
         std::log1p((a - 1.0) / x + (a - 1.0) * (a - 2.0) / (x * x));
}

std::vector<double> hochberg(std::span<const double> pvals) {
  if (pvals.empty()) throw Error(ErrorCode::EmptyInput, "hochberg needs at least one p-value");
  for (double p : pvals) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "p-values must lie in [0, 1]");
    }
  }
  const std::size_t m = pvals.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
  std::vector<double> adj(m);
  double running = 1.0;
  for (std::size_t r = m; r-- > 0;) {
    const double scaled = static_cast<double>(m - r) * pvals[order[r]];
    running = std::min(running, scaled);
    adj[order[r]] = std::min(running, 1.0);
  }
  return adj;
}

std::vector<double> hochberg_log(std::span<const double> log_pvals) {
  if (log_pvals.empty()) throw Error(ErrorCode::EmptyInput, "hochberg needs at least one p-value");
  for (double lp : log_pvals) {
    if (!(lp <= 0.0)) throw Error(ErrorCode::InvalidConfig, "log p-values must be <= 0");
  }
  const std::size_t m = log_pvals.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return log_pvals[a] < log_pvals[b]; });
  std::vector<double> adj(m);
  double running = 0.0;
  for (std::size_t r = m; r-- > 0;) {
    running = std::min(running, std::log(static_cast<double>(m - r)) + log_pvals[order[r]]);
    adj[order[r]] = running;
  }
  return adj;
}

GroupedScores group_sorted(std::span<const double> sorted_x) {
  GroupedScores g;
  std::size_t i = 0;
  while (i < sorted_x.size()) {
    std::size_t j = i;
    while (j < sorted_x.size() && sorted_x[j] == sorted_x[i]) ++j;
    g.cutpoints.push_back(sorted_x[i]);
    g.group_sizes.push_back(j - i);
    g.cumulative.push_back(j);
    i = j;
  }
  return g;
}

std::vector<std::size_t> order_by(std::span<const double> x) {
  std::vector<std::size_t> idx;
  idx.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isnan(x[i])) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  return idx;
}

namespace {

void check_information(const Eigen::MatrixXd& info, Eigen::Index dim) {
  if (info.rows() != dim || info.cols() != dim) {
    throw Error(ErrorCode::SchemaMismatch, "information matrix does not match score dimension");
  }
  if (!info.allFinite()) {
    throw Error(ErrorCode::SingularInformation, "information matrix has non-finite entries");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(info, Eigen::EigenvaluesOnly);
  const double top = es.eigenvalues().maxCoeff();
  if (!(top > 0.0) || es.eigenvalues().minCoeff() <= 1e-14 * top) {
    throw Error(ErrorCode::SingularInformation, "information matrix is not positive definite");
  }
}

}  // namespace

CategoricalResult test_categorical(const Eigen::MatrixXd& scores, const Eigen::MatrixXd& info,
                                   std::span<const int> groups) {
  if (static_cast<std::size_t>(scores.rows()) != groups.size()) {
    throw Error(ErrorCode::SchemaMismatch, "score rows and group labels differ in length");
  }
  const Eigen::Index dim = scores.cols();
  std::map<int, std::pair<Eigen::VectorXd, std::size_t>> sums;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    auto [it, inserted] = sums.try_emplace(groups[i], Eigen::VectorXd::Zero(dim), 0);
    it->second.first += scores.row(static_cast<Eigen::Index>(i)).transpose();
    ++it->second.second;
  }
  if (sums.size() < 2) {
    throw Error(ErrorCode::TooFewGroups, "categorical test needs at least two groups");
  }
  check_information(info, dim);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(info);

  CategoricalResult r;
  r.groups = sums.size();
  r.smallest_group = groups.size();
  // Contributions are added in ascending order so that relabeling the
  // categories leaves the statistic bit-identical.
  std::vector<double> terms;
  for (const auto& [label, entry] : sums) {
    const auto& [s, m] = entry;
    terms.push_back(s.dot(ldlt.solve(s)) / static_cast<double>(m));
    r.smallest_group = std::min(r.smallest_group, m);
  }
  std::sort(terms.begin(), terms.end());
  for (double t : terms) r.statistic += t;
  r.df = static_cast<std::size_t>(dim) * (r.groups - 1);
  r.p = chisq_sf(r.statistic, static_cast<double>(r.df));
  return r;
}

std::vector<ParameterResult> test_continuous(const Eigen::MatrixXd& scores,
                                             const Eigen::MatrixXd& info,
                                             const GroupedScores& groups) {
  if (groups.groups() < 2) {
    throw Error(ErrorCode::TooFewGroups, "continuous test needs at least two distinct values");
  }
  if (static_cast<std::size_t>(scores.rows()) != groups.total()) {
    throw Error(ErrorCode::SchemaMismatch, "score rows do not match grouped subjects");
  }
  const Eigen::Index dim = scores.cols();
  check_information(info, dim);
  const Eigen::MatrixXd w =
      inverse_sqrt(info) / std::sqrt(static_cast<double>(scores.rows()));

  Eigen::VectorXd cum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sup = Eigen::VectorXd::Zero(dim);
  Eigen::Index row = 0;
  for (std::size_t g = 0; g + 1 < groups.groups(); ++g) {
    const auto end = static_cast<Eigen::Index>(groups.cumulative[g]);
    for (; row < end; ++row) cum += scores.row(row).transpose();
    sup = sup.cwiseMax((w * cum).cwiseAbs());
  }

  std::vector<ParameterResult> out(static_cast<std::size_t>(dim));
  for (Eigen::Index q = 0; q < dim; ++q) {
    out[static_cast<std::size_t>(q)] = {static_cast<std::size_t>(q), sup(q), fd_sf(sup(q)),
                                        fd_log_sf(sup(q))};
  }
  return out;
}

double exponential_chisq(Component component, std::span<const double> time,
                         std::span<const std::uint8_t> event, std::span<const int> groups) {
  struct Cell {
    double m = 0.0, d = 0.0, s = 0.0;
  };
  std::map<int, Cell> cells;
  double n = 0.0, d_total = 0.0, s_total = 0.0;
  for (std::size_t i = 0; i < time.size(); ++i) {
    const double c = component == Component::Event ? (event[i] ? 1.0 : 0.0) : (event[i] ? 0.0 : 1.0);
    auto& cell = cells[groups[i]];
    cell.m += 1.0;
    cell.d += c;
    cell.s += time[i];
    n += 1.0;
    d_total += c;
    s_total += time[i];
  }
  if (cells.size() < 2) throw Error(ErrorCode::TooFewGroups, "need at least two groups");
  if (d_total == 0.0) throw Error(ErrorCode::DegenerateComponent, "no contributing observations");
  const double rate = d_total / s_total;
  double acc = 0.0;
  for (const auto& [label, cell] : cells) {
    const double dev = cell.d - rate * cell.s;
    acc += dev * dev / cell.m;
  }
  return n / d_total * acc;
}

double exponential_sup_statistic(Component component, std::span<const double> time,
                                 std::span<const std::uint8_t> event, std::span<const double> x) {
  const auto order = order_by(x);
  std::vector<double> sorted_x(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) sorted_x[k] = x[order[k]];
  const auto groups = group_sorted(sorted_x);
  if (groups.groups() < 2) throw Error(ErrorCode::TooFewGroups, "need two distinct values");

  double d_total = 0.0, s_total = 0.0;
  for (std::size_t i : order) {
    d_total += component == Component::Event ? (event[i] ? 1.0 : 0.0) : (event[i] ? 0.0 : 1.0);
    s_total += time[i];
  }
  if (d_total == 0.0) throw Error(ErrorCode::DegenerateComponent, "no contributing observations");
  const double rate = d_total / s_total;
  double dg = 0.0, sg = 0.0, best = 0.0;
  std::size_t k = 0;
  for (std::size_t g = 0; g + 1 < groups.groups(); ++g) {
    for (; k < groups.cumulative[g]; ++k) {
      const std::size_t i = order[k];
      dg += component == Component::Event ? (event[i] ? 1.0 : 0.0) : (event[i] ? 0.0 : 1.0);
      sg += time[i];
    }
    best = std::max(best, std::fabs(dg - rate * sg));
  }
  return best / std::sqrt(d_total);
}

const char* to_string(ComponentTestStatus status) noexcept {
  switch (status) {
    case ComponentTestStatus::Tested: return "tested";
    case ComponentTestStatus::Degenerate: return "degenerate";
    case ComponentTestStatus::Skipped: return "skipped";
    case ComponentTestStatus::NotTestable: return "not-testable";
    case ComponentTestStatus::FitFailure: return "fit-failure";
  }
  return "unknown";
}

namespace {

ComponentTest run_component(const ComponentFit& fit, const SurvivalDataset& data,
                            const CovariateColumn& column) {
  ComponentTest out;
  out.component = fit.component;
  if (fit.status == FitStatus::Degenerate) {
    out.status = ComponentTestStatus::Degenerate;
    return out;
  }
  if (fit.status == FitStatus::Failed) {
    out.status = ComponentTestStatus::FitFailure;
    return out;
  }
  const FittedModel& model = *fit.model;
  try {
    if (column.meta.kind == CovariateKind::Categorical) {
      const Eigen::MatrixXd u = score_contributions(model, data);
      std::vector<int> labels(column.values.size());
      for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(column.values[i]);
      const auto r = test_categorical(u, model.info, labels);
      const double log_p = chisq_log_sf(r.statistic, static_cast<double>(r.df));
      out.parameters.push_back({0, r.statistic, r.p, log_p});
      out.adjusted.push_back(r.p);
      out.df = r.df;
      out.p = r.p;
      out.log_p = log_p;
    } else {
      const auto order = order_by(column.values);
      const auto time = data.time();
      const auto event = data.event();
      std::vector<double> t(order.size()), x(order.size());
      std::vector<std::uint8_t> e(order.size());
      for (std::size_t k = 0; k < order.size(); ++k) {
        t[k] = time[order[k]];
        e[k] = event[order[k]];
        x[k] = column.values[order[k]];
      }
      const Eigen::MatrixXd u = score_contributions(model, t, e);
      out.parameters = test_continuous(u, model.info, group_sorted(x));
      std::vector<double> raw, raw_log;
      for (const auto& pr : out.parameters) {
        raw.push_back(pr.p);
        raw_log.push_back(pr.log_p);
      }
      out.adjusted = hochberg(raw);
      out.p = *std::min_element(out.adjusted.begin(), out.adjusted.end());
      const auto adjusted_log = hochberg_log(raw_log);
      out.log_p = *std::min_element(adjusted_log.begin(), adjusted_log.end());
    }
    out.status = ComponentTestStatus::Tested;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularInformation && e.code() != ErrorCode::TooFewGroups) throw;
    out = ComponentTest{};
    out.component = fit.component;
    out.status = ComponentTestStatus::NotTestable;
  }
  return out;
}

}  // namespace

StabilityReport variable_test(const SurvivalDataset& node_data, const std::string& variable,
                              const ComponentFit& event_model, const ComponentFit& censor_model,
                              VariableTestOptions options) {
  const CovariateColumn& full_column = node_data.covariate(variable);
  StabilityReport rep;
  rep.variable = variable;
  rep.kind = full_column.meta.kind;
  rep.event.component = Component::Event;
  rep.censor.component = Component::Censor;

  // Subjects missing this variable are left out, with models refit on the rest.
  const SurvivalDataset* data = &node_data;
  SurvivalDataset reduced;
  ComponentFit event_fit = event_model;
  ComponentFit censor_fit = censor_model;
  if (full_column.has_missing()) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < node_data.size(); ++i) {
      if (!full_column.is_missing(i)) keep.push_back(i);
    }
    reduced = node_data.subset(keep);
    data = &reduced;
    if (!keep.empty()) {
      event_fit = try_fit(event_model.family, Component::Event, reduced);
      censor_fit = try_fit(censor_model.family, Component::Censor, reduced);
    }
  }
  const CovariateColumn& column = data->covariate(variable);
  rep.n_tested = data->size();
  rep.groups = column.distinct_count();

  if (rep.groups < 2) {
    rep.testable = false;
    rep.note = "not testable: fewer than two distinct values";
    rep.event.status = ComponentTestStatus::NotTestable;
    rep.censor.status = options.include_censor ? ComponentTestStatus::NotTestable
                                               : ComponentTestStatus::Skipped;
    return rep;
  }
  if (rep.kind == CovariateKind::Categorical) {
    std::map<double, std::size_t> counts;
    for (double v : column.values) ++counts[v];
    for (const auto& [v, m] : counts) rep.small_groups = rep.small_groups || m < 5;
  }

  rep.event = run_component(event_fit, *data, column);
  if (options.include_censor) {
    rep.censor = run_component(censor_fit, *data, column);
  } else {
    rep.censor.status = ComponentTestStatus::Skipped;
  }

  std::vector<ComponentTest*> tested;
  for (ComponentTest* c : {&rep.event, &rep.censor}) {
    if (c->status == ComponentTestStatus::Tested) tested.push_back(c);
  }
  if (tested.empty()) {
    rep.testable = false;
    rep.note = "not testable: no component could be tested";
    return rep;
  }
  std::vector<double> comp_p, comp_log_p;
  for (auto* c : tested) {
    comp_p.push_back(c->p);
    comp_log_p.push_back(c->log_p);
  }
  const auto adj = hochberg(comp_p);
  const auto adj_log = hochberg_log(comp_log_p);
  for (std::size_t k = 0; k < tested.size(); ++k) {
    tested[k]->adjusted_p = adj[k];
    tested[k]->log_adjusted_p = adj_log[k];
  }
  rep.variable_p = *std::min_element(adj.begin(), adj.end());
  rep.log_variable_p = *std::min_element(adj_log.begin(), adj_log.end());
  rep.more_heterogeneous =
      rep.event.log_p <= rep.censor.log_p ? Component::Event : Component::Censor;
  return rep;
}

}  // namespace survcart
