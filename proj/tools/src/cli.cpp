#include "survcart_cli/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "survcart/dataio.hpp"
#include "survcart/simlab.hpp"
#include "survcart/stability.hpp"
#include "survcart/tree.hpp"

namespace survcart::cli {

int exit_code_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidConfig: return kConfigError;
    case ErrorCode::SpecParseError: return kSpecError;
    case ErrorCode::IoError: return kIoError;
    case ErrorCode::InvalidTime:
    case ErrorCode::DegenerateComponent:
    case ErrorCode::NonConvergence:
    case ErrorCode::SchemaMismatch:
    case ErrorCode::TooFewGroups:
    case ErrorCode::SingularInformation:
    case ErrorCode::EmptyInput:
    case ErrorCode::EmptyGroup:
    case ErrorCode::UnknownVariable:
    case ErrorCode::MissingValue:
    case ErrorCode::MissingColumn:
    case ErrorCode::ParseError:
    case ErrorCode::EmptyDataset:
    case ErrorCode::TruthSchemaMismatch: return kDataError;
  }
  return kInternal;
}

namespace {

struct DataFlags {
  std::string data;
  std::string time;
  std::string event;
  std::string event_value = "1";
  std::string vars;
  std::string id;
};

struct ModelFlags {
  std::string time_dist = "exponential";
  std::string cens_dist = "exponential";
  bool no_censor_heterogeneity = false;
};

void add_data_flags(CLI::App& app, DataFlags& f) {
  app.add_option("--data", f.data, "input CSV file")->required();
  app.add_option("--time", f.time, "follow-up time column")->required();
  app.add_option("--event", f.event, "event indicator column")->required();
  app.add_option("--event-value", f.event_value, "value of the event column meaning an event")
      ->capture_default_str();
  app.add_option("--vars", f.vars, "partitioning variables as name:cat or name:cont, comma separated");
  app.add_option("--id", f.id, "subject id column");
}

void add_model_flags(CLI::App& app, ModelFlags& f) {
  app.add_option("--time-dist", f.time_dist, "event-time family: exponential, weibull, lognormal, normal")
      ->capture_default_str();
  app.add_option("--cens-dist", f.cens_dist, "censoring-time family")->capture_default_str();
  app.add_flag("--no-censor-heterogeneity", f.no_censor_heterogeneity,
               "ignore heterogeneity in the censoring distribution");
}

Family family_flag(const std::string& flag, const std::string& value) {
  const auto f = parse_family(value);
  if (!f) throw Error(ErrorCode::InvalidConfig, flag + ": unknown distribution '" + value + "'");
  return *f;
}

SurvivalDataset load_data(const DataFlags& f, const std::vector<VariableSpec>& vars) {
  SchemaSpec schema;
  schema.time_column = f.time;
  schema.event_column = f.event;
  schema.event_value = f.event_value;
  schema.variables = vars;
  if (!f.id.empty()) schema.id_column = f.id;
  return load_csv(f.data, schema);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path + "'");
}

struct FitFlags {
  DataFlags data;
  ModelFlags model;
  double alpha = 0.05;
  std::size_t minsplit = 20;
  std::size_t minbucket = 7;
  std::optional<std::size_t> max_depth;
  std::string out;
  std::string dot;
  std::string km_out;
  bool deterministic = false;
};

int run_fit(const FitFlags& f, std::ostream& out) {
  if (f.data.vars.empty()) throw Error(ErrorCode::InvalidConfig, "--vars: at least one variable is required");
  TreeConfig config;
  config.alpha = f.alpha;
  config.minsplit = f.minsplit;
  config.minbucket = f.minbucket;
  config.max_depth = f.max_depth;
  config.event_dist = family_flag("--time-dist", f.model.time_dist);
  config.censor_dist = family_flag("--cens-dist", f.model.cens_dist);
  config.censor_heterogeneity = !f.model.no_censor_heterogeneity;
  try {
    config.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("--alpha/--minsplit/--minbucket: ") + e.what());
  }
  const auto vars = parse_variable_list(f.data.vars);
  const SurvivalDataset data = load_data(f.data, vars);
  const SurvTree tree = grow(data, config);
  out << render_tree(tree);
  if (!f.out.empty()) write_file(f.out, serialize_tree(tree, {f.deterministic, 2}));
  if (!f.dot.empty()) write_file(f.dot, tree_to_dot(tree));
  if (!f.km_out.empty()) {
    std::ostringstream km;
    write_leaf_km_csv(km, tree, data);
    write_file(f.km_out, km.str());
  }
  return kOk;
}

struct StabFlags {
  DataFlags data;
  ModelFlags model;
  std::string var;
  std::string csv_out;
};

int run_stabtest(const StabFlags& f, std::ostream& out) {
  std::vector<VariableSpec> vars = f.data.vars.empty() ? std::vector<VariableSpec>{} : parse_variable_list(f.data.vars);
  std::string name = f.var;
  if (f.var.find(':') != std::string::npos) {
    const auto given = parse_variable_list(f.var);
    name = given.front().name;
    std::erase_if(vars, [&](const VariableSpec& v) { return v.name == name; });
    vars.push_back(given.front());
  } else if (std::none_of(vars.begin(), vars.end(), [&](const VariableSpec& v) { return v.name == name; })) {
    throw Error(ErrorCode::InvalidConfig,
                "--var: '" + name + "' needs a kind, either in --vars or as name:cat / name:cont");
  }
  const Family event_family = family_flag("--time-dist", f.model.time_dist);
  const Family censor_family = family_flag("--cens-dist", f.model.cens_dist);
  const SurvivalDataset data = load_data(f.data, vars);
  const ComponentFit event_fit = try_fit(event_family, Component::Event, data);
  const ComponentFit censor_fit = try_fit(censor_family, Component::Censor, data);
  const StabilityReport report =
      variable_test(data, name, event_fit, censor_fit, {!f.model.no_censor_heterogeneity});
  out << render_stability(report) << "\n";
  std::ostringstream csv;
  write_stability_csv(csv, report);
  out << csv.str();
  if (!f.csv_out.empty()) write_file(f.csv_out, csv.str());
  return kOk;
}

struct SimFlags {
  std::string spec;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
  unsigned threads = 1;
};

std::uint64_t default_seed(const ExperimentSpec& spec) {
  if (spec.seed) return *spec.seed;
  if (const char* env = std::getenv("SURVCART_SEED")) {
    const std::string text = env;
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos) {
      throw Error(ErrorCode::InvalidConfig, "SURVCART_SEED must be a non-negative integer");
    }
    return std::stoull(text);
  }
  return 1;
}

int run_simulate(const SimFlags& f, std::ostream& out) {
  const ExperimentSpec spec = load_experiment_spec(f.spec);
  const std::uint64_t seed = f.seed ? *f.seed : default_seed(spec);
  const std::size_t reps = f.reps ? *f.reps : spec.replicates;
  const auto rows = run_experiment(spec, seed, reps, {f.threads});
  for (const auto& row : rows) out << row.summary << "\n";
  std::ostringstream csv;
  write_experiment_csv(csv, rows);
  if (f.out.empty()) {
    out << csv.str();
  } else {
    write_file(f.out, csv.str());
  }
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Survival trees that split on heterogeneity in event and censoring times", "survcart"};
  app.require_subcommand(1);

  FitFlags fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "grow a survival tree from CSV data");
  add_data_flags(*fit_cmd, fit.data);
  add_model_flags(*fit_cmd, fit.model);
  fit_cmd->add_option("--alpha", fit.alpha, "significance level after multiplicity adjustment")
      ->capture_default_str();
  fit_cmd->add_option("--minsplit", fit.minsplit, "smallest node that may be split")->capture_default_str();
  fit_cmd->add_option("--minbucket", fit.minbucket, "smallest admissible child")->capture_default_str();
  fit_cmd->add_option("--max-depth", fit.max_depth, "optional depth cap");
  fit_cmd->add_option("--out", fit.out, "tree JSON output path");
  fit_cmd->add_option("--dot", fit.dot, "Graphviz output path");
  fit_cmd->add_option("--km-out", fit.km_out, "per-leaf Kaplan-Meier curves CSV path");
  fit_cmd->add_flag("--deterministic", fit.deterministic, "omit the timestamp from the tree JSON");

  StabFlags stab;
  CLI::App* stab_cmd = app.add_subcommand("stabtest", "parameter instability test for one variable");
  add_data_flags(*stab_cmd, stab.data);
  add_model_flags(*stab_cmd, stab.model);
  stab_cmd->add_option("--var", stab.var, "variable to test (name, or name:cat / name:cont)")->required();
  stab_cmd->add_option("--csv-out", stab.csv_out, "also write the CSV report to this path");

  SimFlags sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "run a simulation experiment from a spec file");
  sim_cmd->add_option("--spec", sim.spec, "experiment spec file")->required();
  sim_cmd->add_option("--out", sim.out, "results CSV path (stdout when omitted)");
  sim_cmd->add_option("--seed", sim.seed, "seed (default: spec file, then SURVCART_SEED, then 1)");
  sim_cmd->add_option("--reps", sim.reps, "replicates per cell (overrides the spec file)");
  sim_cmd->add_option("--threads", sim.threads, "worker threads; 0 uses all cores")->capture_default_str();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "survcart: " << e.what() << "\n";
    if (sim_cmd->parsed() && std::string(e.what()).find("--reps") != std::string::npos) return kSpecError;
    return kConfigError;
  }

  try {
    if (fit_cmd->parsed()) return run_fit(fit, out);
    if (stab_cmd->parsed()) return run_stabtest(stab, out);
    if (sim_cmd->parsed()) return run_simulate(sim, out);
    return kConfigError;
  } catch (const ParseError& e) {
    err << "survcart: " << e.what() << "\n";
    return kDataError;
  } catch (const Error& e) {
    err << "survcart: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "survcart: internal error: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace survcart::cli
