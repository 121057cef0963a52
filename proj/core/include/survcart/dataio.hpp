#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "survcart/dataset.hpp"
#include "survcart/stability.hpp"
#include "survcart/tree.hpp"

namespace survcart {

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 reader: quoted fields may hold commas, CRLF, and doubled quotes.
/// Every row must have as many fields as the header. Throws ParseError.
CsvTable read_csv(std::istream& in);

struct VariableSpec {
  std::string name;
  CovariateKind kind = CovariateKind::Continuous;
};

/// Parses "age:cont,horTh:cat". Throws InvalidConfig naming the bad entry.
std::vector<VariableSpec> parse_variable_list(const std::string& text);

struct SchemaSpec {
  std::string time_column;
  std::string event_column;
  std::string event_value = "1";  ///< entries equal to this mean an observed event
  std::vector<VariableSpec> variables;
  std::optional<std::string> id_column;
};

/// Empty fields and NA are missing. Missing or unparseable time/event values
/// are rejected; missing covariates are kept as missing. Data row numbers in
/// errors are 1-based and exclude the header.
SurvivalDataset load_csv(std::istream& in, const SchemaSpec& schema);
SurvivalDataset load_csv(const std::string& path, const SchemaSpec& schema);

/// id, time, event (0/1), then covariates; numbers in shortest round-trip form.
void write_dataset_csv(std::ostream& out, const SurvivalDataset& data);

// ---------------------------------------------------------------------------
// Tree documents
// ---------------------------------------------------------------------------

inline constexpr const char* kTreeFormatVersion = "survcart-tree/1";

struct SerializeOptions {
  bool deterministic = false;  ///< omit the timestamp
  int indent = 2;
};

std::string serialize_tree(const SurvTree& tree, SerializeOptions options = {});
/// Inverse of serialize_tree as far as routing and node summaries go;
/// training subject sets are not stored. Throws ParseError on malformed input.
SurvTree deserialize_tree(const std::string& json);

/// Graphviz rendering with split labels, N/D counts, and KM medians.
std::string tree_to_dot(const SurvTree& tree);
/// Indented text rendering, one line per node.
std::string render_tree(const SurvTree& tree);

/// node_id, flavor, time, surv, n_risk, n_event for the event and censoring
/// KM curves of every leaf. Requires the training data.
void write_leaf_km_csv(std::ostream& out, const SurvTree& tree, const SurvivalDataset& data);

// ---------------------------------------------------------------------------
// Stability reports
// ---------------------------------------------------------------------------

std::string render_stability(const StabilityReport& report);
/// One row per component statistic: variable, component, status, parameter,
/// statistic, df, p, adjusted_p, component_p, variable_p, more_heterogeneous.
void write_stability_csv(std::ostream& out, const StabilityReport& report);

}  // namespace survcart
