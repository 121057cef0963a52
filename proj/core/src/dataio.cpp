#include "survcart/dataio.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "survcart/error.hpp"
#include "survcart/km.hpp"

namespace survcart {

using nlohmann::json;

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

CsvTable read_csv(std::istream& in) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false, field_started = false, any = false;
  std::size_t line = 1;
  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    // A blank line is skipped rather than read as a one-field record.
    if (!(record.size() == 1 && record.front().empty())) records.push_back(std::move(record));
    record.clear();
  };
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      if (field_started && !field.empty()) {
        throw ParseError(records.size(), std::to_string(record.size() + 1),
                         "line " + std::to_string(line) + ": stray quote inside unquoted field");
      }
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      if (in.peek() == '\n') continue;
      end_record();
      ++line;
    } else if (c == '\n') {
      end_record();
      ++line;
    } else {
      field += c;
      field_started = true;
    }
  }
  if (in_quotes) {
    throw ParseError(records.size(), std::to_string(record.size() + 1), "unterminated quoted field at end of input");
  }
  if (any && (!field.empty() || !record.empty() || field_started)) end_record();

  CsvTable table;
  if (records.empty()) throw Error(ErrorCode::EmptyDataset, "CSV input has no header row");
  table.header = std::move(records.front());
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      const std::size_t got = records[r].size();
      // Names the first absent column, or the position of the first extra field.
      const std::string column = got < table.header.size() ? table.header[got] : std::to_string(table.header.size() + 1);
      throw ParseError(r, column,
                       "data row " + std::to_string(r) + " has " +
                           std::to_string(records[r].size()) + " fields, header has " +
                           std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

std::vector<VariableSpec> parse_variable_list(const std::string& text) {
  std::vector<VariableSpec> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(' ');
    if (b == std::string::npos) continue;
    item = item.substr(b, item.find_last_not_of(' ') - b + 1);
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw Error(ErrorCode::InvalidConfig, "variable '" + item + "' needs a kind, as name:cat or name:cont");
    }
    const std::string kind = item.substr(colon + 1);
    VariableSpec v{item.substr(0, colon), CovariateKind::Continuous};
    if (kind == "cat") {
      v.kind = CovariateKind::Categorical;
    } else if (kind != "cont") {
      throw Error(ErrorCode::InvalidConfig, "variable '" + v.name + "' has unknown kind '" + kind +
                                                "' (use cat or cont)");
    }
    if (std::any_of(out.begin(), out.end(), [&](const VariableSpec& o) { return o.name == v.name; })) {
      throw Error(ErrorCode::InvalidConfig, "variable '" + v.name + "' listed twice");
    }
    out.push_back(v);
  }
  return out;
}

namespace {

bool is_missing_field(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN";
}

std::optional<double> parse_real(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return std::nullopt;
  const auto e = s.find_last_not_of(" \t");
  const char* first = s.data() + b;
  const char* last = s.data() + e + 1;
  if (*first == '+') ++first;
  double v = 0.0;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

SurvivalDataset load_csv(std::istream& in, const SchemaSpec& schema) {
  const CsvTable table = read_csv(in);
  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end()) {
      throw Error(ErrorCode::MissingColumn, "column '" + name + "' not found in header");
    }
    return static_cast<std::size_t>(it - table.header.begin());
  };
  const std::size_t time_col = column_of(schema.time_column);
  const std::size_t event_col = column_of(schema.event_column);
  const std::optional<std::size_t> id_col =
      schema.id_column ? std::optional<std::size_t>(column_of(*schema.id_column)) : std::nullopt;
  std::vector<std::size_t> var_cols;
  std::vector<CovariateMeta> meta;
  for (const auto& v : schema.variables) {
    var_cols.push_back(column_of(v.name));
    meta.push_back({v.name, v.kind});
  }
  if (table.rows.empty()) throw Error(ErrorCode::EmptyDataset, "CSV input has no data rows");

  const std::optional<double> event_number = parse_real(schema.event_value);
  SurvivalDataset data(meta);
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::size_t row_no = r + 1;
    auto fail = [&](std::size_t col, const std::string& what) -> ParseError {
      return ParseError(row_no, table.header[col],
                        "data row " + std::to_string(row_no) + ", column '" + table.header[col] +
                            "': " + what);
    };
    SurvivalRecord rec;
    if (is_missing_field(row[time_col])) throw fail(time_col, "missing time");
    const auto t = parse_real(row[time_col]);
    if (!t) throw fail(time_col, "cannot parse '" + row[time_col] + "' as a number");
    rec.time = *t;
    const std::string& ev = row[event_col];
    if (is_missing_field(ev)) throw fail(event_col, "missing event indicator");
    const auto ev_number = parse_real(ev);
    rec.event = ev == schema.event_value || (ev_number && event_number && *ev_number == *event_number);
    if (id_col) rec.subject_id = row[*id_col];
    for (std::size_t j = 0; j < var_cols.size(); ++j) {
      const std::string& cell = row[var_cols[j]];
      if (is_missing_field(cell)) {
        rec.covariates.emplace_back(std::monostate{});
      } else if (meta[j].kind == CovariateKind::Categorical) {
        rec.covariates.emplace_back(cell);
      } else {
        const auto x = parse_real(cell);
        if (!x) throw fail(var_cols[j], "cannot parse '" + cell + "' as a number");
        rec.covariates.emplace_back(*x);
      }
    }
    data.add_record(rec);
  }
  return data;
}

SurvivalDataset load_csv(const std::string& path, const SchemaSpec& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  return load_csv(in, schema);
}

void write_dataset_csv(std::ostream& out, const SurvivalDataset& data) {
  out << "id,time,event";
  for (const auto& m : data.meta()) out << "," << csv_escape(m.name);
  out << "\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    out << csv_escape(data.ids()[i]) << "," << format_real(data.time()[i]) << ","
        << (data.event()[i] ? 1 : 0);
    for (std::size_t j = 0; j < data.covariate_count(); ++j) {
      const auto& col = data.covariate(j);
      out << ",";
      if (col.is_missing(i)) {
        out << "NA";
      } else if (col.meta.kind == CovariateKind::Categorical) {
        out << csv_escape(col.levels[static_cast<std::size_t>(col.values[i])]);
      } else {
        out << format_real(col.values[i]);
      }
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Tree documents
// ---------------------------------------------------------------------------

namespace {

json real(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_real(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json optional_real(const std::optional<double>& v) { return v ? real(*v) : json(nullptr); }

std::optional<double> read_optional_real(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json component_json(const ComponentFit& fit) {
  json j;
  j["family"] = to_string(fit.family);
  j["status"] = to_string(fit.status);
  j["loglik"] = real(fit.loglik());
  json params = json::array();
  if (fit.model) {
    for (Eigen::Index k = 0; k < fit.model->params.size(); ++k) params.push_back(real(fit.model->params(k)));
  }
  j["params"] = params;
  if (!fit.message.empty()) j["message"] = fit.message;
  return j;
}

Family read_family(const json& j) {
  const auto f = parse_family(j.get<std::string>());
  if (!f) throw ParseError(0, "", "unknown family '" + j.get<std::string>() + "'");
  return *f;
}

ComponentFit read_component(const json& j, Component component) {
  ComponentFit fit;
  fit.family = read_family(j.at("family"));
  fit.component = component;
  const std::string status = j.at("status").get<std::string>();
  if (status == to_string(FitStatus::Fitted)) {
    fit.status = FitStatus::Fitted;
  } else if (status == to_string(FitStatus::Degenerate)) {
    fit.status = FitStatus::Degenerate;
  } else if (status == to_string(FitStatus::Failed)) {
    fit.status = FitStatus::Failed;
  } else {
    throw ParseError(0, "", "unknown fit status '" + status + "'");
  }
  if (j.contains("message")) fit.message = j.at("message").get<std::string>();
  if (fit.status == FitStatus::Fitted) {
    FittedModel m;
    m.family = fit.family;
    m.component = component;
    const auto& params = j.at("params");
    m.params.resize(static_cast<Eigen::Index>(params.size()));
    for (std::size_t k = 0; k < params.size(); ++k) m.params(static_cast<Eigen::Index>(k)) = read_real(params[k]);
    m.loglik = read_real(j.at("loglik"));
    fit.model = std::move(m);
  }
  return fit;
}

const char* kind_name(CovariateKind kind) { return to_string(kind); }

CovariateKind read_kind(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == "cat") return CovariateKind::Categorical;
  if (s == "cont") return CovariateKind::Continuous;
  throw ParseError(0, "", "unknown covariate kind '" + s + "'");
}

Component read_mode(const json& j) {
  const std::string s = j.get<std::string>();
  if (s == to_string(Component::Event)) return Component::Event;
  if (s == to_string(Component::Censor)) return Component::Censor;
  throw ParseError(0, "", "unknown split mode '" + s + "'");
}

std::string timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string serialize_tree(const SurvTree& tree, SerializeOptions options) {
  json doc;
  doc["format"] = kTreeFormatVersion;
  if (!options.deterministic) doc["timestamp"] = timestamp_now();
  const TreeConfig& c = tree.config;
  doc["config"] = {{"alpha", c.alpha},
                   {"minsplit", c.minsplit},
                   {"minbucket", c.minbucket},
                   {"event_dist", to_string(c.event_dist)},
                   {"censor_dist", to_string(c.censor_dist)},
                   {"censor_heterogeneity", c.censor_heterogeneity},
                   {"max_depth", c.max_depth ? json(*c.max_depth) : json(nullptr)}};
  json schema = json::array();
  for (const auto& m : tree.schema) schema.push_back({{"name", m.name}, {"kind", kind_name(m.kind)}});
  doc["schema"] = schema;
  doc["loglik"] = real(tree.loglik);
  doc["aic"] = real(tree.aic);

  json nodes = json::array();
  for (const auto& node : tree.nodes) {
    json n;
    n["id"] = node.id;
    n["depth"] = node.depth;
    n["n"] = node.n;
    n["d"] = node.d;
    n["event_model"] = component_json(node.event_model);
    n["censor_model"] = component_json(node.censor_model);
    n["km_median_event"] = optional_real(node.km_median_event);
    n["km_median_censor"] = optional_real(node.km_median_censor);
    if (node.split) {
      const SplitRule& s = *node.split;
      json sj;
      sj["variable"] = s.variable;
      sj["variable_index"] = s.variable_index;
      sj["kind"] = kind_name(s.kind);
      if (s.kind == CovariateKind::Continuous) {
        sj["cutpoint"] = s.cutpoint;
      } else {
        sj["left_levels"] = s.left_levels;
      }
      sj["mode"] = to_string(s.mode);
      sj["lr"] = real(s.lr);
      sj["variable_p"] = real(s.variable_p);
      sj["raw_p"] = real(s.raw_p);
      sj["missing_left"] = s.missing_left;
      n["split"] = sj;
      n["children"] = {tree.nodes[(*node.children)[0]].id, tree.nodes[(*node.children)[1]].id};
    } else {
      n["stop_reason"] = to_string(node.stop_reason);
    }
    json screening = json::array();
    for (const auto& v : node.screening) {
      screening.push_back({{"variable", v.variable},
                           {"testable", v.testable},
                           {"event_p", real(v.event_p)},
                           {"censor_p", real(v.censor_p)},
                           {"p", real(v.p)},
                           {"adjusted_p", real(v.adjusted_p)}});
    }
    n["screening"] = screening;
    nodes.push_back(n);
  }
  doc["nodes"] = nodes;
  json trace = json::array();
  for (const auto& t : tree.trace) {
    trace.push_back({{"node_id", t.node_id},
                     {"loglik_before", real(t.loglik_before)},
                     {"loglik_after", real(t.loglik_after)},
                     {"tree_aic", real(t.tree_aic)}});
  }
  doc["trace"] = trace;
  return doc.dump(options.indent) + "\n";
}

SurvTree deserialize_tree(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kTreeFormatVersion) {
      throw ParseError(0, "", "unsupported tree format '" + doc.at("format").get<std::string>() + "'");
    }
    SurvTree tree;
    const json& c = doc.at("config");
    tree.config.alpha = c.at("alpha").get<double>();
    tree.config.minsplit = c.at("minsplit").get<std::size_t>();
    tree.config.minbucket = c.at("minbucket").get<std::size_t>();
    tree.config.event_dist = read_family(c.at("event_dist"));
    tree.config.censor_dist = read_family(c.at("censor_dist"));
    tree.config.censor_heterogeneity = c.at("censor_heterogeneity").get<bool>();
    if (!c.at("max_depth").is_null()) tree.config.max_depth = c.at("max_depth").get<std::size_t>();
    for (const auto& m : doc.at("schema")) {
      tree.schema.push_back({m.at("name").get<std::string>(), read_kind(m.at("kind"))});
    }
    tree.loglik = read_real(doc.at("loglik"));
    tree.aic = read_real(doc.at("aic"));

    std::map<std::uint64_t, std::size_t> index_of;
    std::vector<std::optional<std::array<std::uint64_t, 2>>> child_ids;
    for (const auto& n : doc.at("nodes")) {
      TreeNode node;
      node.id = n.at("id").get<std::uint64_t>();
      node.depth = n.at("depth").get<std::size_t>();
      node.n = n.at("n").get<std::size_t>();
      node.d = n.at("d").get<std::size_t>();
      node.event_model = read_component(n.at("event_model"), Component::Event);
      node.censor_model = read_component(n.at("censor_model"), Component::Censor);
      node.km_median_event = read_optional_real(n.at("km_median_event"));
      node.km_median_censor = read_optional_real(n.at("km_median_censor"));
      if (n.contains("split")) {
        const json& sj = n.at("split");
        SplitRule s;
        s.variable = sj.at("variable").get<std::string>();
        s.variable_index = sj.at("variable_index").get<std::size_t>();
        s.kind = read_kind(sj.at("kind"));
        if (s.kind == CovariateKind::Continuous) {
          s.cutpoint = sj.at("cutpoint").get<double>();
        } else {
          s.left_levels = sj.at("left_levels").get<std::vector<std::string>>();
        }
        s.mode = read_mode(sj.at("mode"));
        s.lr = read_real(sj.at("lr"));
        s.variable_p = read_real(sj.at("variable_p"));
        s.raw_p = read_real(sj.at("raw_p"));
        s.missing_left = sj.at("missing_left").get<bool>();
        if (s.variable_index >= tree.schema.size() || tree.schema[s.variable_index].name != s.variable) {
          throw ParseError(0, "", "split variable '" + s.variable + "' does not match the schema");
        }
        node.split = std::move(s);
        const auto ids = n.at("children").get<std::vector<std::uint64_t>>();
        if (ids.size() != 2) throw ParseError(0, "", "internal node needs two children");
        child_ids.push_back(std::array<std::uint64_t, 2>{ids[0], ids[1]});
      } else {
        const auto reason = parse_stop_reason(n.at("stop_reason").get<std::string>());
        if (!reason) throw ParseError(0, "", "unknown stop reason");
        node.stop_reason = *reason;
        child_ids.push_back(std::nullopt);
      }
      for (const auto& v : n.at("screening")) {
        node.screening.push_back({v.at("variable").get<std::string>(), v.at("testable").get<bool>(),
                                  read_real(v.at("event_p")), read_real(v.at("censor_p")),
                                  read_real(v.at("p")), read_real(v.at("adjusted_p"))});
      }
      if (!index_of.emplace(node.id, tree.nodes.size()).second) {
        throw ParseError(0, "", "duplicate node id " + std::to_string(node.id));
      }
      tree.nodes.push_back(std::move(node));
    }
    if (tree.nodes.empty() || tree.nodes.front().id != 1) {
      throw ParseError(0, "", "tree document must start with the root node");
    }
    for (std::size_t k = 0; k < tree.nodes.size(); ++k) {
      if (!child_ids[k]) continue;
      std::array<std::size_t, 2> idx{};
      for (int s = 0; s < 2; ++s) {
        const std::uint64_t want = 2 * tree.nodes[k].id + static_cast<std::uint64_t>(s);
        const auto it = index_of.find((*child_ids[k])[s]);
        if (it == index_of.end() || (*child_ids[k])[s] != want) {
          throw ParseError(0, "", "node " + std::to_string(tree.nodes[k].id) + " has a bad child id");
        }
        idx[s] = it->second;
      }
      tree.nodes[k].children = idx;
    }
    for (const auto& t : doc.at("trace")) {
      tree.trace.push_back({t.at("node_id").get<std::uint64_t>(), read_real(t.at("loglik_before")),
                            read_real(t.at("loglik_after")), read_real(t.at("tree_aic"))});
    }
    return tree;
  } catch (const json::exception& e) {
    throw ParseError(0, "", std::string("malformed tree document: ") + e.what());
  }
}

namespace {

std::string fmt(double v, const char* spec = "%.4g") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string median_text(const std::optional<double>& m) { return m ? fmt(*m) : std::string("NA"); }

std::string p_text(double p) { return p < 1e-4 ? fmt(p, "%.2e") : fmt(p, "%.4f"); }

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string tree_to_dot(const SurvTree& tree) {
  std::ostringstream out;
  out << "digraph survtree {\n  node [shape=box, fontname=\"Helvetica\"];\n";
  for (const auto& node : tree.nodes) {
    std::string label = "N=" + std::to_string(node.n) + ", D=" + std::to_string(node.d) +
                        "\\nmedian T: " + median_text(node.km_median_event) +
                        "\\nmedian C: " + median_text(node.km_median_censor);
    if (node.split) {
      label = dot_escape(node.split->variable) + " (p=" + p_text(node.split->variable_p) + ")\\n" + label;
    }
    out << "  n" << node.id << " [label=\"" << label << "\""
        << (node.is_leaf() ? ", style=rounded" : "") << "];\n";
  }
  for (const auto& node : tree.nodes) {
    if (node.is_leaf()) continue;
    for (int s = 0; s < 2; ++s) {
      out << "  n" << node.id << " -> n" << tree.nodes[(*node.children)[s]].id << " [label=\""
          << dot_escape(node.split->describe(s == 0)) << "\"];\n";
    }
  }
  out << "}\n";
  return out.str();
}

std::string render_tree(const SurvTree& tree) {
  std::ostringstream out;
  struct Item {
    std::size_t index;
    std::string edge;
  };
  std::vector<Item> stack{{0, "root"}};
  while (!stack.empty()) {
    const Item item = stack.back();
    stack.pop_back();
    const TreeNode& node = tree.nodes[item.index];
    out << std::string(2 * node.depth, ' ') << "[" << node.id << "] " << item.edge
        << ": N=" << node.n << " D=" << node.d << " median(T)=" << median_text(node.km_median_event)
        << " median(C)=" << median_text(node.km_median_censor);
    if (node.split) {
      out << " | split " << node.split->variable << " (" << to_string(node.split->mode)
          << " mode, adj p=" << p_text(node.split->variable_p) << ", LR=" << fmt(node.split->lr, "%.3f")
          << ")";
      stack.push_back({(*node.children)[1], node.split->describe(false)});
      stack.push_back({(*node.children)[0], node.split->describe(true)});
    } else {
      out << " | leaf (" << to_string(node.stop_reason) << ")";
    }
    out << "\n";
  }
  out << "loglik=" << fmt(tree.loglik, "%.6g") << " AIC=" << fmt(tree.aic, "%.6g")
      << " leaves=" << tree.leaf_count() << "\n";
  return out.str();
}

void write_leaf_km_csv(std::ostream& out, const SurvTree& tree, const SurvivalDataset& data) {
  out << "node_id,flavor,time,surv,n_risk,n_event\n";
  for (std::size_t k : tree.leaves()) {
    const TreeNode& node = tree.nodes[k];
    if (node.subjects.empty()) continue;
    const SurvivalDataset sub = data.subset(node.subjects);
    for (Component flavor : {Component::Event, Component::Censor}) {
      const KMCurve curve = km_fit(sub.time(), sub.event(), flavor);
      for (std::size_t j = 0; j < curve.time.size(); ++j) {
        out << node.id << "," << to_string(flavor) << "," << format_real(curve.time[j]) << ","
            << format_real(curve.surv[j]) << "," << curve.n_risk[j] << "," << curve.n_event[j] << "\n";
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Stability reports
// ---------------------------------------------------------------------------

std::string render_stability(const StabilityReport& r) {
  std::ostringstream out;
  out << "variable " << r.variable << " (" << to_string(r.kind) << "), n=" << r.n_tested
      << ", groups=" << r.groups << "\n";
  if (!r.testable) {
    out << "  not testable, p=1";
    if (!r.note.empty()) out << " (" << r.note << ")";
    out << "\n";
    return out.str();
  }
  if (r.small_groups) out << "  warning: some category has fewer than 5 subjects\n";
  for (const ComponentTest* c : {&r.event, &r.censor}) {
    out << "  " << to_string(c->component) << ": " << to_string(c->status);
    if (c->status == ComponentTestStatus::Tested) {
      if (r.kind == CovariateKind::Categorical) {
        out << ", chi2=" << fmt(c->parameters.front().statistic, "%.4f") << " df=" << c->df;
      }
      out << ", p=" << p_text(c->p) << ", adjusted p=" << p_text(c->adjusted_p);
    }
    out << "\n";
    if (c->status == ComponentTestStatus::Tested && r.kind == CovariateKind::Continuous) {
      for (std::size_t q = 0; q < c->parameters.size(); ++q) {
        out << "    parameter " << c->parameters[q].parameter << ": D=" << fmt(c->parameters[q].statistic, "%.4f")
            << ", p=" << p_text(c->parameters[q].p) << ", adjusted p=" << p_text(c->adjusted[q]) << "\n";
      }
    }
  }
  out << "  variable p=" << p_text(r.variable_p) << ", more heterogeneous: "
      << to_string(r.more_heterogeneous) << "\n";
  return out.str();
}

void write_stability_csv(std::ostream& out, const StabilityReport& r) {
  out << "variable,component,status,parameter,statistic,df,p,adjusted_p,component_p,variable_p,"
         "more_heterogeneous\n";
  for (const ComponentTest* c : {&r.event, &r.censor}) {
    auto prefix = [&] {
      out << csv_escape(r.variable) << "," << to_string(c->component) << "," << to_string(c->status) << ",";
    };
    auto suffix = [&] {
      out << "," << format_real(c->p) << "," << format_real(r.variable_p) << ","
          << to_string(r.more_heterogeneous) << "\n";
    };
    if (c->parameters.empty()) {
      prefix();
      out << ",,,1,1";
      suffix();
      continue;
    }
    for (std::size_t q = 0; q < c->parameters.size(); ++q) {
      prefix();
      out << c->parameters[q].parameter << "," << format_real(c->parameters[q].statistic) << ","
          << (r.kind == CovariateKind::Categorical ? std::to_string(c->df) : "") << ","
          << format_real(c->parameters[q].p) << "," << format_real(c->adjusted[q]);
      suffix();
    }
  }
}

}  // namespace survcart
