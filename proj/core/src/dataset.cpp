#include "survcart/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "survcart/error.hpp"

namespace survcart {

const char* to_string(CovariateKind kind) noexcept {
  return kind == CovariateKind::Categorical ? "cat" : "cont";
}

bool CovariateColumn::has_missing() const {
  return std::any_of(values.begin(), values.end(), [](double v) { return std::isnan(v); });
}

std::size_t CovariateColumn::distinct_count() const {
  std::set<double> seen;
  for (double v : values) {
    if (!std::isnan(v)) seen.insert(v);
  }
  return seen.size();
}

std::optional<std::size_t> CovariateColumn::level_index(const std::string& label) const {
  auto it = std::lower_bound(levels.begin(), levels.end(), label);
  if (it == levels.end() || *it != label) return std::nullopt;
  return static_cast<std::size_t>(it - levels.begin());
}

namespace {

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

// Inserts `label` into the sorted level table, renumbering existing codes.
std::size_t intern_level(CovariateColumn& col, const std::string& label) {
  auto it = std::lower_bound(col.levels.begin(), col.levels.end(), label);
  auto pos = static_cast<std::size_t>(it - col.levels.begin());
  if (it != col.levels.end() && *it == label) return pos;
  col.levels.insert(it, label);
  for (double& v : col.values) {
    if (!std::isnan(v) && v >= static_cast<double>(pos)) v += 1.0;
  }
  return pos;
}

}  // namespace

SurvivalDataset::SurvivalDataset(std::vector<CovariateMeta> meta) {
  columns_.reserve(meta.size());
  for (auto& m : meta) columns_.push_back(CovariateColumn{std::move(m), {}, {}});
}

SurvivalDataset SurvivalDataset::from_records(std::vector<CovariateMeta> meta,
                                              const std::vector<SurvivalRecord>& records) {
  SurvivalDataset ds(std::move(meta));
  for (const auto& r : records) ds.add_record(r);
  return ds;
}

SurvivalDataset SurvivalDataset::from_times(std::vector<double> time,
                                            std::vector<std::uint8_t> event) {
  if (time.size() != event.size()) {
    throw Error(ErrorCode::SchemaMismatch, "time and event vectors differ in length");
  }
  SurvivalDataset ds;
  ds.ids_.resize(time.size());
  for (std::size_t i = 0; i < time.size(); ++i) ds.ids_[i] = std::to_string(i + 1);
  ds.time_ = std::move(time);
  ds.event_ = std::move(event);
  for (auto& e : ds.event_) e = e ? 1 : 0;
  return ds;
}

void SurvivalDataset::add_record(const SurvivalRecord& record) {
  if (record.covariates.size() != columns_.size()) {
    throw Error(ErrorCode::SchemaMismatch,
                "record '" + record.subject_id + "' has " +
                    std::to_string(record.covariates.size()) + " covariates, schema declares " +
                    std::to_string(columns_.size()));
  }
  std::vector<double> coded(columns_.size(), kMissing);
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    auto& col = columns_[j];
    const auto& v = record.covariates[j];
    if (std::holds_alternative<std::monostate>(v)) continue;
    if (col.meta.kind == CovariateKind::Continuous) {
      if (!std::holds_alternative<double>(v)) {
        throw Error(ErrorCode::SchemaMismatch,
                    "continuous covariate '" + col.meta.name + "' given a label");
      }
      coded[j] = std::get<double>(v);
    } else {
      std::string label = std::holds_alternative<std::string>(v)
                              ? std::get<std::string>(v)
                              : [&] {
                                  char buf[32];
                                  std::snprintf(buf, sizeof buf, "%.17g", std::get<double>(v));
                                  return std::string(buf);
                                }();
      coded[j] = static_cast<double>(intern_level(col, label));
    }
  }
  ids_.push_back(record.subject_id.empty() ? std::to_string(ids_.size() + 1) : record.subject_id);
  time_.push_back(record.time);
  event_.push_back(record.event ? 1 : 0);
  for (std::size_t j = 0; j < columns_.size(); ++j) columns_[j].values.push_back(coded[j]);
}

void SurvivalDataset::add_continuous(const std::string& name, std::vector<double> values) {
  if (values.size() != size()) {
    throw Error(ErrorCode::SchemaMismatch, "covariate '" + name + "' has wrong length");
  }
  columns_.push_back(CovariateColumn{{name, CovariateKind::Continuous}, std::move(values), {}});
}

void SurvivalDataset::add_categorical(const std::string& name,
                                      const std::vector<std::string>& labels) {
  if (labels.size() != size()) {
    throw Error(ErrorCode::SchemaMismatch, "covariate '" + name + "' has wrong length");
  }
  CovariateColumn col{{name, CovariateKind::Categorical}, {}, {}};
  std::set<std::string> distinct(labels.begin(), labels.end());
  col.levels.assign(distinct.begin(), distinct.end());
  col.values.reserve(labels.size());
  for (const auto& l : labels) col.values.push_back(static_cast<double>(*col.level_index(l)));
  columns_.push_back(std::move(col));
}

std::size_t SurvivalDataset::events() const noexcept {
  return static_cast<std::size_t>(std::count(event_.begin(), event_.end(), std::uint8_t{1}));
}

double SurvivalDataset::total_time() const noexcept {
  return std::accumulate(time_.begin(), time_.end(), 0.0);
}

const CovariateColumn& SurvivalDataset::covariate(const std::string& name) const {
  auto j = covariate_index(name);
  if (!j) throw Error(ErrorCode::UnknownVariable, "unknown variable '" + name + "'");
  return columns_[*j];
}

std::optional<std::size_t> SurvivalDataset::covariate_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].meta.name == name) return j;
  }
  return std::nullopt;
}

std::vector<CovariateMeta> SurvivalDataset::meta() const {
  std::vector<CovariateMeta> out;
  out.reserve(columns_.size());
  for (const auto& c : columns_) out.push_back(c.meta);
  return out;
}

SurvivalRecord SurvivalDataset::record(std::size_t i) const {
  SurvivalRecord r{ids_.at(i), time_.at(i), event_.at(i) != 0, {}};
  r.covariates.reserve(columns_.size());
  for (const auto& c : columns_) {
    double v = c.values[i];
    if (std::isnan(v)) {
      r.covariates.emplace_back(std::monostate{});
    } else if (c.meta.kind == CovariateKind::Categorical) {
      r.covariates.emplace_back(c.levels[static_cast<std::size_t>(v)]);
    } else {
      r.covariates.emplace_back(v);
    }
  }
  return r;
}

SurvivalDataset SurvivalDataset::subset(std::span<const std::size_t> rows) const {
  SurvivalDataset out;
  out.ids_.reserve(rows.size());
  out.time_.reserve(rows.size());
  out.event_.reserve(rows.size());
  for (std::size_t r : rows) {
    out.ids_.push_back(ids_.at(r));
    out.time_.push_back(time_[r]);
    out.event_.push_back(event_[r]);
  }
  out.columns_.reserve(columns_.size());
  for (const auto& c : columns_) {
    CovariateColumn col{c.meta, {}, c.levels};
    col.values.reserve(rows.size());
    for (std::size_t r : rows) col.values.push_back(c.values[r]);
    out.columns_.push_back(std::move(col));
  }
  return out;
}

SurvivalDataset SurvivalDataset::flipped() const {
  SurvivalDataset out = *this;
  for (auto& e : out.event_) e = e ? 0 : 1;
  return out;
}

}  // namespace survcart
