#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sunncast/climate.hpp"
#include "sunncast/dates.hpp"

namespace sunncast {

/// When the yearly accumulation (and the insect's life-cycle) restarts.
/// Day-of-year 1 by default; the agronomic start is operator configuration.
struct SeasonClock {
  int cycle_start_doy = 1;  // 1..366

  void validate() const;
};

enum class PhaseLabel : int {
  WinterQuarters = 1,  // phase 1
  Migration = 2,       // phase 2
  WheatField = 3,      // phase 3
};

inline constexpr int kPhaseCount = 3;

std::optional<PhaseLabel> phase_from_int(int v);

/// Composition over the five nymphal maturity stages; entries in [0,1]
/// and summing to 1.
struct NymphStageRatios {
  Eigen::Array<double, 5, 1> r = Eigen::Array<double, 5, 1>::Zero();

  double operator[](int stage_1based) const { return r[stage_1based - 1]; }
  double sum() const { return r.sum(); }
};

/// Stage counts to fractions of the day's total; absent when nothing was
/// counted that day.
std::optional<NymphStageRatios> counts_to_ratios(const std::array<std::int64_t, 5>& counts);

/// The ten accumulable sensor fields, in feature order.
inline constexpr std::array<SensorField, 10> kAccumulableFields = {
    SensorField::WsAvg, SensorField::WsMax, SensorField::SrAvg, SensorField::Rainfall,
    SensorField::RhAvg, SensorField::AtMin, SensorField::AtAvg, SensorField::AtMax,
    SensorField::DMin,  SensorField::DAvg};

inline constexpr int kAccFieldCount = 10;

/// Running sums since the most recent cycle start (inclusive).
struct AccumulatedRecord {
  std::string station_id;
  Date date{};
  Eigen::Array<double, kAccFieldCount, 1> values = Eigen::Array<double, kAccFieldCount, 1>::Zero();
};

struct AccumulateResult {
  std::vector<AccumulatedRecord> records;
  long dropped_days = 0;  // days missing some accumulable field, skipped
};

/// Accumulates the ten accumulable fields day by day, resetting the running
/// sums on every date whose day-of-year equals the cycle start. Days with a
/// missing accumulable field are dropped and contribute nothing.
AccumulateResult accumulate_season(const StationSeries& series, SeasonClock clock);

enum class ModelId { M1Raw, M2Accumulated, M3AccumulatedReduced };

std::optional<ModelId> model_id_from_name(std::string_view name);  // "m1" | "m2" | "m3"
const char* model_id_name(ModelId id);

/// Ordered feature list for one of the three models. Model files record the
/// spec and refuse mismatched vectors.
struct FeatureSetSpec {
  ModelId id = ModelId::M2Accumulated;
  std::vector<std::string> fields;

  static FeatureSetSpec standard(ModelId id);
  int size() const { return int(fields.size()); }

  bool operator==(const FeatureSetSpec&) const = default;
};

/// Where a spec field's value comes from: a raw sensor column or a slot of
/// the accumulated record ("acc_" prefix).
struct FieldRef {
  bool accumulated = false;
  int index = 0;  // SensorField column, or kAccumulableFields slot
};

/// Resolves every field name of the feature set. Throws InputError on unknowns.
std::vector<FieldRef> resolve_fields(const FeatureSetSpec& spec);

/// One row of the per-day phase/count labels.
struct LabelRecord {
  std::string station_id;
  Date date{};
  PhaseLabel phase = PhaseLabel::WinterQuarters;
  std::optional<std::array<std::int64_t, 5>> counts;  // absent = no count made
};

struct LabelParseResult {
  std::vector<LabelRecord> records;  // sorted by (station_id, date)
  std::vector<ParseDiagnostic> diagnostics;
};

/// Reads the label CSV: station_id,date,phase,n1,n2,n3,n4,n5 with phase in
/// {1,2,3}; all-empty counts mean no count was made that day.
LabelParseResult parse_label_csv(std::istream& in);

std::string write_label_csv(std::span<const LabelRecord> records);

/// Feature matrix plus aligned labels; the training unit for both learners.
struct Dataset {
  FeatureSetSpec spec;
  Eigen::MatrixXd features;  // rows x spec.size()
  std::vector<PhaseLabel> phases;
  std::vector<std::optional<NymphStageRatios>> ratios;
  std::vector<std::string> station_ids;  // row provenance
  std::vector<Date> dates;
  long dropped = 0;  // labelled days lacking a feature

  Eigen::Index rows() const { return features.rows(); }
  long regression_rows() const;
};

/// Inner join of labels with features on (station, date). Raw features come
/// from the repaired series, accumulated ones from accumulate_season output.
/// Days lacking any feature of the set are dropped and counted. Throws
/// InputError when nothing survives.
Dataset build_dataset(std::span<const AccumulatedRecord> acc,
                      std::span<const StationSeries> raw,
                      std::span<const LabelRecord> labels,
                      const FeatureSetSpec& spec);

}  // namespace sunncast
