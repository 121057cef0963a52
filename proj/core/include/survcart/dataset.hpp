#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace survcart {

enum class CovariateKind { Categorical, Continuous };

const char* to_string(CovariateKind kind) noexcept;

struct CovariateMeta {
  std::string name;
  CovariateKind kind = CovariateKind::Continuous;
};

/// A covariate value as supplied by a caller: missing, a real, or a level label.
using CovariateValue = std::variant<std::monostate, double, std::string>;

struct SurvivalRecord {
  std::string subject_id;
  double time = 0.0;
  bool event = false;
  std::vector<CovariateValue> covariates;
};

/// One covariate column. Continuous values are stored as-is; categorical
/// values are stored as indices into `levels` (sorted label order). Missing
/// entries are NaN in both cases.
struct CovariateColumn {
  CovariateMeta meta;
  std::vector<double> values;
  std::vector<std::string> levels;

  bool is_missing(std::size_t row) const { return std::isnan(values[row]); }
  bool has_missing() const;
  std::size_t distinct_count() const;
  std::optional<std::size_t> level_index(const std::string& label) const;
};

/// Column-oriented right-censored dataset: follow-up time min(T*, C), event
/// indicator, covariates, and subject ids.
class SurvivalDataset {
 public:
  SurvivalDataset() = default;
  explicit SurvivalDataset(std::vector<CovariateMeta> meta);

  static SurvivalDataset from_records(std::vector<CovariateMeta> meta,
                                      const std::vector<SurvivalRecord>& records);

  /// Builds a dataset with no covariates.
  static SurvivalDataset from_times(std::vector<double> time, std::vector<std::uint8_t> event);

  void add_record(const SurvivalRecord& record);
  void add_continuous(const std::string& name, std::vector<double> values);
  void add_categorical(const std::string& name, const std::vector<std::string>& labels);

  std::size_t size() const noexcept { return time_.size(); }
  std::size_t events() const noexcept;
  double total_time() const noexcept;

  std::span<const double> time() const noexcept { return time_; }
  std::span<const std::uint8_t> event() const noexcept { return event_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }

  std::size_t covariate_count() const noexcept { return columns_.size(); }
  const CovariateColumn& covariate(std::size_t j) const { return columns_.at(j); }
  const CovariateColumn& covariate(const std::string& name) const;
  std::optional<std::size_t> covariate_index(const std::string& name) const;
  std::vector<CovariateMeta> meta() const;

  SurvivalRecord record(std::size_t i) const;

  /// Rows listed in `rows`, in that order; categorical level tables are kept.
  SurvivalDataset subset(std::span<const std::size_t> rows) const;

  /// Same data with every event indicator flipped (censoring treated as event).
  SurvivalDataset flipped() const;

 private:
  std::vector<std::string> ids_;
  std::vector<double> time_;
  std::vector<std::uint8_t> event_;
  std::vector<CovariateColumn> columns_;
};

}  // namespace survcart
