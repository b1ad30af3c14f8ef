#pragma once

#include <Eigen/Core>
#include <cmath>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sunncast/dates.hpp"
#include "sunncast/errors.hpp"

namespace sunncast {

/// Daily sensor readings of one station, in CSV column order.
enum class SensorField : int {
  WdAvg = 0,   // wind direction, degrees [0,360)
  WsAvg,       // wind speed avg, km/h
  WsMax,       // wind speed max, km/h
  SrAvg,       // solar radiation avg, W/m^2
  Rainfall,    // mm
  DMin,        // dewpoint min, degC
  DAvg,        // dewpoint avg, degC
  RhMin,       // relative humidity min, %
  RhAvg,
  RhMax,
  AtMin,       // air temperature min, degC
  AtAvg,
  AtMax,
};

inline constexpr int kSensorFieldCount = 13;
inline constexpr int kDefaultMaxGapDays = 14;

const char* sensor_field_name(SensorField f);
std::optional<SensorField> sensor_field_from_name(std::string_view name);

/// Missing readings are NaN throughout the pipeline.
inline bool is_missing(double v) { return std::isnan(v); }
inline double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

enum class SiteKind { WheatField, WinterQuarters };

struct StationMeta {
  std::string station_id;
  SiteKind site_kind = SiteKind::WheatField;
  std::string location_name;
};

/// One station-day of raw readings; any sensor may be missing.
struct RawClimateRecord {
  std::string station_id;
  Date date{};
  Eigen::Array<double, kSensorFieldCount, 1> values =
      Eigen::Array<double, kSensorFieldCount, 1>::Constant(missing_value());

  double& operator[](SensorField f) { return values[int(f)]; }
  double operator[](SensorField f) const { return values[int(f)]; }
};

enum class DiagnosticKind { EmptyCell, UnparseableCell, BadRow, DuplicateDay, InvalidValue };

struct ParseDiagnostic {
  DiagnosticKind kind;
  long line = 0;  // 1-based line in the input, 0 if not row-specific
  std::string message;
};

struct ParseResult {
  std::vector<RawClimateRecord> records;  // sorted by (station_id, date)
  std::vector<ParseDiagnostic> diagnostics;
};

/// Reads the Table-1 CSV schema:
///   station_id,date,wd_avg,ws_avg,ws_max,sr_avg,rainfall,d_min,d_avg,
///   rh_min,rh_avg,rh_max,at_min,at_avg,at_max
/// Empty cells are missing readings. Rows with an empty station_id inherit
/// meta.station_id. Duplicate (station,date) rows: the later row wins, with
/// a diagnostic. Throws InputError on a missing/unknown header or a file
/// with no usable data rows.
ParseResult parse_climate_csv(std::istream& in, const StationMeta& meta);

/// Inverse of parse_climate_csv: canonical header, empty cell per missing
/// value, shortest round-trip formatting for numbers.
std::string write_climate_csv(std::span<const RawClimateRecord> records);

struct Violation {
  std::vector<SensorField> fields;  // offenders, demoted to missing by the pipeline
  std::string message;
};

/// Range and ordering checks for one record. Total: never throws; an empty
/// result means the record is consistent.
std::vector<Violation> validate_record(const RawClimateRecord& r);

/// Applies validate_record and blanks every offending field.
/// Returns the violations that were found.
std::vector<Violation> demote_invalid(RawClimateRecord& r);

/// A station's readings on a dense daily grid; absent dates become
/// all-missing rows so gap lengths are measured in calendar days.
struct StationSeries {
  std::string station_id;
  Date start{};
  Eigen::ArrayXXd values;  // days x kSensorFieldCount, NaN = missing

  Eigen::Index days() const { return values.rows(); }
  Date date_at(Eigen::Index i) const { return start + std::chrono::days{i}; }
  double at(Eigen::Index day, SensorField f) const { return values(day, int(f)); }
};

/// Builds the dense grid for one station. Records must belong to a single
/// station; duplicates resolved upstream.
StationSeries make_station_series(std::span<const RawClimateRecord> records);

/// Groups parsed records by station and builds one series per station,
/// ordered by station id.
std::vector<StationSeries> group_into_series(std::span<const RawClimateRecord> records);

enum class RepairStatus { Interpolated, Unrepairable };

struct GapSpan {
  SensorField field;
  Date first_missing{};
  Date last_missing{};
  RepairStatus status = RepairStatus::Unrepairable;

  long length_days() const {
    return (last_missing - first_missing).count() + 1;
  }
};

struct GapReport {
  std::string station_id;
  std::vector<GapSpan> spans;  // sorted by (field, first_missing), disjoint per field
};

/// Fills interior missing runs of length <= max_gap by linear interpolation
/// between the nearest present neighbours, independently per field. Leading
/// and trailing runs, and runs longer than max_gap, are left missing and
/// reported Unrepairable. Present values are never modified; the pass is
/// idempotent.
GapReport interpolate_gaps(StationSeries& series, int max_gap = kDefaultMaxGapDays);

}  // namespace sunncast
