#include "survcart/simlab.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "survcart/error.hpp"
#include "survcart/stability.hpp"

namespace survcart {

std::vector<double> gen_exponential(double rate, std::size_t n, Philox4x32& rng) {
  if (!(rate > 0.0) || !std::isfinite(rate)) {
    throw Error(ErrorCode::InvalidConfig, "exponential rate must be positive");
  }
  std::vector<double> out(n);
  for (auto& t : out) t = rng.exponential(rate);
  return out;
}

double censoring_hazard(double lambda_t, double censor_fraction) {
  if (!(lambda_t > 0.0)) throw Error(ErrorCode::InvalidConfig, "event hazard must be positive");
  if (!(censor_fraction >= 0.0 && censor_fraction < 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "censoring fraction must lie in [0, 1)");
  }
  return lambda_t * censor_fraction / (1.0 - censor_fraction);
}

RateEstimate wilson_interval(std::size_t successes, std::size_t trials) {
  RateEstimate r;
  r.replicates = trials;
  r.rejections = successes;
  if (trials == 0) return r;
  constexpr double z = 1.959963984540054;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double denom = 1.0 + z * z / n;
  const double centre = (p + z * z / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
  r.rate = p;
  r.ci_low = std::max(0.0, centre - half);
  r.ci_high = std::min(1.0, centre + half);
  return r;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n, 1)));
  if (threads <= 1) {
    for (std::size_t r = 0; r < n; ++r) body(r);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t r = next++; r < n; r = next++) {
        try {
          body(r);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : 0.5 * (values[m - 1] + values[m]);
}

namespace {

void add_subject(std::vector<double>& time, std::vector<std::uint8_t>& event, double t_event,
                 double t_censor) {
  time.push_back(std::min(t_event, t_censor));
  event.push_back(t_event <= t_censor ? 1 : 0);
}

enum class Outcome { Accept, Reject, Failure };

Outcome sup_test(const SurvivalDataset& data, double threshold) {
  const ComponentFit fit = try_fit(Family::Exponential, Component::Event, data);
  if (!fit.fitted()) return Outcome::Failure;
  const CovariateColumn& x = data.covariate(0);
  const auto order = order_by(x.values);
  std::vector<double> t(order.size()), xs(order.size());
  std::vector<std::uint8_t> e(order.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    t[k] = data.time()[order[k]];
    e[k] = data.event()[order[k]];
    xs[k] = x.values[order[k]];
  }
  const Eigen::MatrixXd u = score_contributions(*fit.model, t, e);
  try {
    const auto res = test_continuous(u, fit.model->info, group_sorted(xs));
    return res.front().statistic > threshold ? Outcome::Reject : Outcome::Accept;
  } catch (const Error&) {
    return Outcome::Failure;
  }
}

RateEstimate tally(const std::vector<Outcome>& outcomes) {
  std::size_t rejected = 0, failed = 0;
  for (auto o : outcomes) {
    rejected += o == Outcome::Reject ? 1 : 0;
    failed += o == Outcome::Failure ? 1 : 0;
  }
  RateEstimate r = wilson_interval(rejected, outcomes.size());
  r.failures = failed;
  return r;
}

void require_replicates(std::size_t replicates, Experiment experiment) {
  if (replicates < minimum_replicates(experiment)) {
    throw Error(ErrorCode::InvalidConfig, "at least " +
                                              std::to_string(minimum_replicates(experiment)) +
                                              " replicates are required");
  }
}

}  // namespace

SurvivalDataset simulate_size_data(const SizeDesign& design, Philox4x32& rng) {
  const double lambda_c = censoring_hazard(design.lambda_t, design.censoring);
  std::vector<double> time, x;
  std::vector<std::uint8_t> event;
  for (std::size_t i = 0; i < design.n; ++i) {
    const double t_event = rng.exponential(design.lambda_t);
    const double t_censor = lambda_c > 0.0 ? rng.exponential(lambda_c) : INFINITY;
    add_subject(time, event, t_event, t_censor);
    x.push_back(i < design.n / 2 ? rng.uniform(0.0, 10.0) : rng.uniform(10.0, 20.0));
  }
  auto data = SurvivalDataset::from_times(std::move(time), std::move(event));
  data.add_continuous("x", std::move(x));
  return data;
}

RateEstimate run_size(const SizeDesign& design, SimOptions options) {
  require_replicates(design.replicates, Experiment::Size);
  if (design.n < 2) throw Error(ErrorCode::InvalidConfig, "size design needs n >= 2");
  const double threshold = fd_quantile(0.95);
  std::vector<Outcome> outcomes(design.replicates);
  parallel_for(design.replicates, options.threads, [&](std::size_t r) {
    Philox4x32 rng(design.seed, r);
    outcomes[r] = sup_test(simulate_size_data(design, rng), threshold);
  });
  return tally(outcomes);
}

SurvivalDataset simulate_power_data(const PowerDesign& design, Philox4x32& rng) {
  if (design.n1 < 1 || design.n2 < 1) {
    throw Error(ErrorCode::InvalidConfig, "power design needs n1, n2 >= 1");
  }
  std::vector<double> time, x;
  std::vector<std::uint8_t> event;
  for (std::size_t i = 0; i < design.n1 + design.n2; ++i) {
    const bool first = i < design.n1;
    const double t_event = rng.exponential(first ? design.lambda_t1 : design.lambda_t2);
    const double t_censor = rng.exponential(design.lambda_c);
    add_subject(time, event, t_event, t_censor);
    x.push_back(first ? rng.uniform(0.0, 10.0) : rng.uniform(10.0, 20.0));
  }
  auto data = SurvivalDataset::from_times(std::move(time), std::move(event));
  data.add_continuous("x", std::move(x));
  return data;
}

RateEstimate run_power(const PowerDesign& design, SimOptions options) {
  require_replicates(design.replicates, Experiment::Power);
  const double threshold = fd_quantile(0.95);
  std::vector<Outcome> outcomes(design.replicates);
  parallel_for(design.replicates, options.threads, [&](std::size_t r) {
    Philox4x32 rng(design.seed, r);
    outcomes[r] = sup_test(simulate_power_data(design, rng), threshold);
  });
  return tally(outcomes);
}

std::vector<SubgroupRates> TreeDesign::default_subgroups() {
  return {{1.0 / 10.0, 1.0 / 40.0, 400},
          {1.0 / 20.0, 1.0 / 40.0, 400},
          {1.0 / 40.0, 1.0 / 80.0, 400},
          {1.0 / 40.0, 1.0 / 20.0, 400}};
}

SimulatedTreeData simulate_tree_data(const TreeDesign& design, Philox4x32& rng) {
  const std::size_t k = design.subgroups.size();
  if (k != 1 && k != 4) {
    throw Error(ErrorCode::InvalidConfig, "tree design needs 1 or 4 subgroups");
  }
  SimulatedTreeData sim;
  std::vector<double> time, x2, x3, x4;
  std::vector<std::uint8_t> event;
  std::vector<std::string> x1, x5, x6;
  for (std::size_t g = 0; g < k; ++g) {
    const SubgroupRates& sg = design.subgroups[g];
    if (!(sg.lambda_t > 0.0 && sg.lambda_c > 0.0)) {
      throw Error(ErrorCode::InvalidConfig, "subgroup hazards must be positive");
    }
    sim.truth.lambda_t.push_back(sg.lambda_t);
    sim.truth.lambda_c.push_back(sg.lambda_c);
    for (std::size_t i = 0; i < sg.n; ++i) {
      add_subject(time, event, rng.exponential(sg.lambda_t), rng.exponential(sg.lambda_c));
      bool b1;
      double v2, v3;
      if (k == 1) {
        b1 = rng.bernoulli(0.5);
        v2 = rng.uniform(0.0, 100.0);
        v3 = rng.uniform(0.0, 5.0);
      } else {
        b1 = g >= 2;
        v2 = g == 0 ? rng.uniform(0.0, 50.0) : g == 1 ? rng.uniform(50.0, 100.0) : rng.uniform(0.0, 100.0);
        v3 = g == 2 ? rng.uniform(0.0, 2.5) : g == 3 ? rng.uniform(2.5, 5.0) : rng.uniform(0.0, 5.0);
      }
      x1.push_back(b1 ? "1" : "0");
      x2.push_back(v2);
      x3.push_back(v3);
      x4.push_back(rng.uniform(0.0, 100.0));
      x5.push_back(rng.bernoulli(0.5) ? "1" : "0");
      x6.push_back(std::to_string(1 + rng.below(6)));
      sim.truth.subgroup.push_back(g);
    }
  }
  sim.data = SurvivalDataset::from_times(std::move(time), std::move(event));
  sim.data.add_categorical("X1", x1);
  sim.data.add_continuous("X2", std::move(x2));
  sim.data.add_continuous("X3", std::move(x3));
  sim.data.add_continuous("X4", std::move(x4));
  sim.data.add_categorical("X5", x5);
  sim.data.add_categorical("X6", x6);
  return sim;
}

TreeReplicate describe_replicate(const SurvTree& tree, const SimulatedTreeData& sim) {
  TreeReplicate rep;
  rep.leaves = tree.leaf_count();
  rep.metrics = tree_metrics(tree, sim.data, &sim.truth);
  rep.aic = tree.aic;
  const TreeNode& root = tree.root();
  if (root.is_leaf()) return rep;
  rep.first_split = root.split->variable;
  std::vector<std::string> child_vars;
  bool children_split_once = true;
  for (std::size_t c : *root.children) {
    const TreeNode& child = tree.nodes[c];
    if (child.is_leaf()) {
      children_split_once = false;
      continue;
    }
    rep.second_splits.push_back(child.split->variable);
    for (std::size_t g : *child.children) children_split_once &= tree.nodes[g].is_leaf();
  }
  // Same splitting variables as the generating tree; cutpoints are not compared.
  std::vector<std::string> sorted = rep.second_splits;
  std::sort(sorted.begin(), sorted.end());
  rep.identical_to_truth = rep.first_split == "X1" && children_split_once &&
                           sorted == std::vector<std::string>{"X2", "X3"};
  return rep;
}

std::vector<TreeRecoverySummary> run_tree_recovery(const TreeDesign& design,
                                                   const std::vector<NamedConfig>& configs,
                                                   SimOptions options) {
  require_replicates(design.replicates, Experiment::Tree);
  for (const auto& c : configs) c.config.validate();
  const std::size_t reps = design.replicates;
  std::vector<std::vector<TreeReplicate>> results(configs.size(), std::vector<TreeReplicate>(reps));
  parallel_for(reps, options.threads, [&](std::size_t r) {
    Philox4x32 rng(design.seed, r);
    const SimulatedTreeData sim = simulate_tree_data(design, rng);
    for (std::size_t c = 0; c < configs.size(); ++c) {
      results[c][r] = describe_replicate(grow(sim.data, configs[c].config), sim);
    }
  });

  std::vector<TreeRecoverySummary> out;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    TreeRecoverySummary s;
    s.label = configs[c].label;
    s.replicates = reps;
    std::size_t x1_first = 0, x2 = 0, x3 = 0, identical = 0;
    std::vector<double> mad_t, mad_c, pmad_t, pmad_c, dmad_t, dmad_c, aic;
    for (const auto& rep : results[c]) {
      ++s.leaf_histogram[rep.leaves];
      auto used = [&](const std::string& v) {
        return rep.first_split == v || std::find(rep.second_splits.begin(), rep.second_splits.end(),
                                                 v) != rep.second_splits.end();
      };
      x1_first += rep.first_split == "X1" ? 1 : 0;
      x2 += used("X2") ? 1 : 0;
      x3 += used("X3") ? 1 : 0;
      identical += rep.identical_to_truth ? 1 : 0;
      mad_t.push_back(rep.metrics.mad_t);
      mad_c.push_back(rep.metrics.mad_c);
      pmad_t.push_back(rep.metrics.perfect_mad_t);
      pmad_c.push_back(rep.metrics.perfect_mad_c);
      dmad_t.push_back(rep.metrics.pct_diff_t);
      dmad_c.push_back(rep.metrics.pct_diff_c);
      aic.push_back(rep.aic);
    }
    std::size_t best = 0;
    for (const auto& [leaves, count] : s.leaf_histogram) {
      if (count > best) {
        best = count;
        s.modal_leaves = leaves;
      }
    }
    const double n = static_cast<double>(reps);
    s.pct_x1_first = 100.0 * static_cast<double>(x1_first) / n;
    s.pct_x2_first_or_second = 100.0 * static_cast<double>(x2) / n;
    s.pct_x3_first_or_second = 100.0 * static_cast<double>(x3) / n;
    s.pct_identical = 100.0 * static_cast<double>(identical) / n;
    s.median_mad_t = median(mad_t);
    s.median_mad_c = median(mad_c);
    s.median_perfect_mad_t = median(pmad_t);
    s.median_perfect_mad_c = median(pmad_c);
    s.median_delta_mad_t = median(dmad_t);
    s.median_delta_mad_c = median(dmad_c);
    s.median_aic = median(aic);
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Experiment spec files
// ---------------------------------------------------------------------------

std::size_t minimum_replicates(Experiment experiment) noexcept {
  return experiment == Experiment::Tree ? 50 : 100;
}

NamedConfig parse_config_label(const std::string& label, const TreeConfig& base) {
  const auto slash = label.find('/');
  if (slash == std::string::npos) {
    throw Error(ErrorCode::SpecParseError, "config '" + label + "' is not of the form event/censor");
  }
  const std::string ev = label.substr(0, slash), ce = label.substr(slash + 1);
  NamedConfig nc{label, base};
  const auto event_family = parse_family(ev);
  if (!event_family) throw Error(ErrorCode::SpecParseError, "unknown distribution '" + ev + "'");
  nc.config.event_dist = *event_family;
  if (ce == "na" || ce == "NA") {
    nc.config.censor_heterogeneity = false;
  } else {
    const auto censor_family = parse_family(ce);
    if (!censor_family) throw Error(ErrorCode::SpecParseError, "unknown distribution '" + ce + "'");
    nc.config.censor_dist = *censor_family;
    nc.config.censor_heterogeneity = true;
  }
  return nc;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class SpecReader {
 public:
  explicit SpecReader(std::map<std::string, std::pair<std::string, int>> entries)
      : entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) > 0; }

  std::vector<double> reals(const std::string& key, std::vector<double> fallback) {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const auto& item : split_list(take(key))) out.push_back(to_real(key, item));
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  double real(const std::string& key, double fallback) {
    const auto v = reals(key, {fallback});
    if (v.size() != 1) fail(key, "expected a single value");
    return v.front();
  }

  std::vector<std::size_t> counts(const std::string& key, std::vector<std::size_t> fallback) {
    if (!has(key)) return fallback;
    std::vector<std::size_t> out;
    for (const auto& item : split_list(take(key))) out.push_back(to_count(key, item));
    if (out.empty()) fail(key, "empty list");
    return out;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto v = counts(key, {fallback});
    if (v.size() != 1) fail(key, "expected a single value");
    return v.front();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? take(key) : fallback;
  }

  /// Throws on any key nobody asked for.
  void finish() const {
    for (const auto& [key, entry] : entries_) {
      if (!used_.count(key)) {
        throw Error(ErrorCode::SpecParseError,
                    "line " + std::to_string(entry.second) + ": unknown key '" + key + "'");
      }
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = entries_.find(key);
    const std::string where = it == entries_.end() ? "" : "line " + std::to_string(it->second.second) + ": ";
    throw Error(ErrorCode::SpecParseError, where + key + ": " + what);
  }

 private:
  std::string take(const std::string& key) {
    used_.insert({key, true});
    return entries_.at(key).first;
  }

  double to_real(const std::string& key, const std::string& item) const {
    // Accepts fractions such as 1/20.
    const auto slash = item.find('/');
    try {
      std::size_t pos = 0;
      if (slash != std::string::npos) {
        const double num = std::stod(item.substr(0, slash), &pos);
        if (pos != slash) fail(key, "bad number '" + item + "'");
        const std::string den_text = item.substr(slash + 1);
        const double den = std::stod(den_text, &pos);
        if (pos != den_text.size() || den == 0.0) fail(key, "bad number '" + item + "'");
        return num / den;
      }
      const double v = std::stod(item, &pos);
      if (pos != item.size()) fail(key, "bad number '" + item + "'");
      return v;
    } catch (const std::logic_error&) {
      fail(key, "bad number '" + item + "'");
    }
  }

  std::size_t to_count(const std::string& key, const std::string& item) const {
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      fail(key, "expected a non-negative integer, got '" + item + "'");
    }
    try {
      return static_cast<std::size_t>(std::stoull(item));
    } catch (const std::logic_error&) {
      fail(key, "integer out of range '" + item + "'");
    }
  }

  std::map<std::string, std::pair<std::string, int>> entries_;
  std::map<std::string, bool> used_;
};

}  // namespace

ExperimentSpec parse_experiment_spec(std::istream& in) {
  std::map<std::string, std::pair<std::string, int>> entries;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::SpecParseError,
                  "line " + std::to_string(number) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::SpecParseError, "line " + std::to_string(number) + ": empty key");
    }
    if (!entries.emplace(key, std::make_pair(value, number)).second) {
      throw Error(ErrorCode::SpecParseError,
                  "line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
  }
  SpecReader r(std::move(entries));
  ExperimentSpec spec;
  const std::string kind = r.text("experiment", "");
  if (kind == "size") {
    spec.experiment = Experiment::Size;
  } else if (kind == "power") {
    spec.experiment = Experiment::Power;
  } else if (kind == "tree") {
    spec.experiment = Experiment::Tree;
  } else {
    r.fail("experiment", kind.empty() ? "missing (size, power or tree)" : "unknown kind '" + kind + "'");
  }
  if (r.has("seed")) spec.seed = r.count("seed", 0);
  const std::size_t default_reps = spec.experiment == Experiment::Size    ? 2000
                                   : spec.experiment == Experiment::Power ? 1000
                                                                          : 200;
  spec.replicates = r.count("replicates", default_reps);

  if (spec.experiment == Experiment::Size) {
    const double lambda_t = r.real("lambda_t", 1.0 / 20.0);
    for (double c : r.reals("censoring", {0.25})) {
      if (!(c >= 0.0 && c < 1.0)) r.fail("censoring", "must lie in [0, 1)");
      for (std::size_t n : r.counts("n", {1000})) {
        if (n < 2) r.fail("n", "must be at least 2");
        SizeDesign d;
        d.lambda_t = lambda_t;
        d.censoring = c;
        d.n = n;
        spec.size_cells.push_back(d);
      }
    }
    if (!(lambda_t > 0.0)) r.fail("lambda_t", "must be positive");
  } else if (spec.experiment == Experiment::Power) {
    const double lambda_t1 = r.real("lambda_t1", 1.0 / 20.0);
    const auto lambda_t2 = r.reals("lambda_t2", {1.0 / 40.0});
    const auto lambda_c = r.reals("lambda_c", {1.0 / 30.0});
    const auto n1 = r.counts("n1", {50});
    const auto n2 = r.counts("n2", {50});
    if (lambda_t2.size() != lambda_c.size()) r.fail("lambda_c", "must have as many entries as lambda_t2");
    if (n1.size() != n2.size()) r.fail("n2", "must have as many entries as n1");
    for (std::size_t s = 0; s < lambda_t2.size(); ++s) {
      for (std::size_t k = 0; k < n1.size(); ++k) {
        PowerDesign d;
        d.lambda_t1 = lambda_t1;
        d.lambda_t2 = lambda_t2[s];
        d.lambda_c = lambda_c[s];
        d.n1 = n1[k];
        d.n2 = n2[k];
        if (!(d.lambda_t1 > 0.0 && d.lambda_t2 > 0.0 && d.lambda_c > 0.0)) {
          r.fail("lambda_t2", "hazards must be positive");
        }
        if (d.n1 < 1 || d.n2 < 1) r.fail("n1", "sample sizes must be at least 1");
        spec.power_cells.push_back(d);
      }
    }
  } else {
    TreeConfig base;
    base.alpha = r.real("alpha", base.alpha);
    base.minsplit = r.count("minsplit", base.minsplit);
    base.minbucket = r.count("minbucket", base.minbucket);
    if (r.has("max_depth")) base.max_depth = r.count("max_depth", 0);
    const std::size_t groups = r.count("subgroups", 4);
    if (groups != 1 && groups != 4) r.fail("subgroups", "must be 1 or 4");
    auto& sgs = spec.tree_design.subgroups;
    if (groups == 1) sgs.resize(1);
    const std::size_t per_group = r.count("n_per_subgroup", sgs.front().n);
    for (std::size_t g = 0; g < sgs.size(); ++g) {
      const std::string prefix = "subgroup" + std::to_string(g + 1) + ".";
      sgs[g].lambda_t = r.real(prefix + "lambda_t", sgs[g].lambda_t);
      sgs[g].lambda_c = r.real(prefix + "lambda_c", sgs[g].lambda_c);
      sgs[g].n = r.count(prefix + "n", per_group);
      if (!(sgs[g].lambda_t > 0.0 && sgs[g].lambda_c > 0.0)) {
        r.fail(prefix + "lambda_t", "hazards must be positive");
      }
    }
    const std::string labels = r.text("configs", "exp/exp,exp/na");
    for (const auto& label : split_list(labels)) spec.tree_configs.push_back(parse_config_label(label, base));
    if (spec.tree_configs.empty()) r.fail("configs", "no configurations listed");
    try {
      for (const auto& c : spec.tree_configs) c.config.validate();
    } catch (const Error& e) {
      throw Error(ErrorCode::SpecParseError, e.what());
    }
  }
  r.finish();
  if (spec.replicates < minimum_replicates(spec.experiment)) {
    r.fail("replicates", "must be at least " + std::to_string(minimum_replicates(spec.experiment)));
  }
  return spec;
}

ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open spec file '" + path + "'");
  return parse_experiment_spec(in);
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

void add_estimate(ExperimentRow& row, const RateEstimate& est, std::uint64_t seed) {
  row.fields.emplace_back("replicates", std::to_string(est.replicates));
  row.fields.emplace_back("estimate", num(est.rate));
  row.fields.emplace_back("ci_low", num(est.ci_low));
  row.fields.emplace_back("ci_high", num(est.ci_high));
  row.fields.emplace_back("failures", std::to_string(est.failures));
  row.fields.emplace_back("seed", std::to_string(seed));
  row.fields.emplace_back("rng", Philox4x32::name);
}

}  // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentSpec& spec, std::uint64_t seed,
                                          std::size_t replicates, SimOptions options) {
  if (replicates < minimum_replicates(spec.experiment)) {
    throw Error(ErrorCode::SpecParseError,
                "replicates must be at least " + std::to_string(minimum_replicates(spec.experiment)));
  }
  std::vector<ExperimentRow> rows;
  if (spec.experiment == Experiment::Size) {
    for (SizeDesign d : spec.size_cells) {
      d.seed = seed;
      d.replicates = replicates;
      const auto est = run_size(d, options);
      ExperimentRow row;
      row.fields = {{"experiment", "size"}, {"lambda_t", num(d.lambda_t)},
                    {"censoring", num(d.censoring)}, {"n", std::to_string(d.n)}};
      add_estimate(row, est, seed);
      row.summary = "size lambda_t=" + num(d.lambda_t) + " censoring=" + num(d.censoring) +
                    " n=" + std::to_string(d.n) + ": " + pct(est.rate) + " [" + pct(est.ci_low) +
                    ", " + pct(est.ci_high) + "]";
      rows.push_back(std::move(row));
    }
  } else if (spec.experiment == Experiment::Power) {
    for (PowerDesign d : spec.power_cells) {
      d.seed = seed;
      d.replicates = replicates;
      const auto est = run_power(d, options);
      ExperimentRow row;
      row.fields = {{"experiment", "power"},       {"lambda_t1", num(d.lambda_t1)},
                    {"lambda_t2", num(d.lambda_t2)}, {"lambda_c", num(d.lambda_c)},
                    {"n1", std::to_string(d.n1)},    {"n2", std::to_string(d.n2)}};
      add_estimate(row, est, seed);
      row.summary = "power lambda_t2=" + num(d.lambda_t2) + " lambda_c=" + num(d.lambda_c) +
                    " n1=" + std::to_string(d.n1) + " n2=" + std::to_string(d.n2) + ": " +
                    pct(est.rate) + " [" + pct(est.ci_low) + ", " + pct(est.ci_high) + "]";
      rows.push_back(std::move(row));
    }
  } else {
    TreeDesign d = spec.tree_design;
    d.seed = seed;
    d.replicates = replicates;
    for (const auto& s : run_tree_recovery(d, spec.tree_configs, options)) {
      std::string hist;
      for (const auto& [leaves, count] : s.leaf_histogram) {
        if (!hist.empty()) hist += ";";
        hist += std::to_string(leaves) + ":" + std::to_string(count);
      }
      ExperimentRow row;
      row.fields = {{"experiment", "tree"},
                    {"config", s.label},
                    {"replicates", std::to_string(s.replicates)},
                    {"modal_leaves", std::to_string(s.modal_leaves)},
                    {"leaf_histogram", hist},
                    {"pct_x1_first", num(s.pct_x1_first)},
                    {"pct_x2_first_or_second", num(s.pct_x2_first_or_second)},
                    {"pct_x3_first_or_second", num(s.pct_x3_first_or_second)},
                    {"pct_identical", num(s.pct_identical)},
                    {"median_mad_t", num(s.median_mad_t)},
                    {"median_mad_c", num(s.median_mad_c)},
                    {"median_perfect_mad_t", num(s.median_perfect_mad_t)},
                    {"median_perfect_mad_c", num(s.median_perfect_mad_c)},
                    {"median_delta_mad_t", num(s.median_delta_mad_t)},
                    {"median_delta_mad_c", num(s.median_delta_mad_c)},
                    {"median_aic", num(s.median_aic)},
                    {"seed", std::to_string(seed)},
                    {"rng", Philox4x32::name}};
      char buf[200];
      std::snprintf(buf, sizeof buf,
                    "tree %s: modal leaves %zu, X1 first %.1f%%, median dMAD(T) %.2f, dMAD(C) %.2f",
                    s.label.c_str(), s.modal_leaves, s.pct_x1_first, s.median_delta_mad_t,
                    s.median_delta_mad_c);
      row.summary = buf;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_experiment_csv(std::ostream& out, const std::vector<ExperimentRow>& rows) {
  if (rows.empty()) return;
  for (std::size_t k = 0; k < rows.front().fields.size(); ++k) {
    out << (k ? "," : "") << rows.front().fields[k].first;
  }
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t k = 0; k < row.fields.size(); ++k) out << (k ? "," : "") << row.fields[k].second;
    out << "\n";
  }
}

}  // namespace survcart
