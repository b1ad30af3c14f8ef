#include "sunncast/climate.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <istream>
#include <map>
#include <sstream>

namespace sunncast {

namespace {

constexpr std::array<const char*, kSensorFieldCount> kFieldNames = {
    "wd_avg", "ws_avg", "ws_max", "sr_avg", "rainfall", "d_min", "d_avg",
    "rh_min", "rh_avg", "rh_max", "at_min", "at_avg", "at_max"};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(pos));
      break;
    }
    cells.push_back(line.substr(pos, comma - pos));
    pos = comma + 1;
  }
  return cells;
}

bool parse_double(std::string_view text, double& out) {
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

const char* sensor_field_name(SensorField f) { return kFieldNames[std::size_t(int(f))]; }

std::optional<SensorField> sensor_field_from_name(std::string_view name) {
  for (int i = 0; i < kSensorFieldCount; ++i) {
    if (name == kFieldNames[std::size_t(i)]) return SensorField(i);
  }
  return std::nullopt;
}

ParseResult parse_climate_csv(std::istream& in, const StationMeta& meta) {
  ParseResult result;
  std::string line;
  if (!std::getline(in, line)) throw InputError("climate CSV: empty input, header expected");

  // Header: the canonical names, any column order, nothing else.
  const auto header_cells = split_csv_line(line);
  int station_col = -1, date_col = -1;
  std::array<int, kSensorFieldCount> field_col;
  field_col.fill(-1);
  for (std::size_t c = 0; c < header_cells.size(); ++c) {
    const std::string_view name = trim(header_cells[c]);
    if (name == "station_id") {
      station_col = int(c);
    } else if (name == "date") {
      date_col = int(c);
    } else if (auto f = sensor_field_from_name(name)) {
      field_col[std::size_t(int(*f))] = int(c);
    } else {
      throw InputError("climate CSV: unknown header column '" + std::string(name) + "'");
    }
  }
  if (station_col < 0 || date_col < 0) throw InputError("climate CSV: header must name station_id and date");
  for (int i = 0; i < kSensorFieldCount; ++i) {
    if (field_col[std::size_t(i)] < 0) {
      throw InputError(std::string("climate CSV: header missing column '") + kFieldNames[std::size_t(i)] + "'");
    }
  }
  const std::size_t n_cols = header_cells.size();

  std::map<std::pair<std::string, Date>, std::size_t> seen;  // (station,date) -> index in records
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != n_cols) {
      result.diagnostics.push_back({DiagnosticKind::BadRow, line_no,
                                    "expected " + std::to_string(n_cols) + " cells, got " +
                                        std::to_string(cells.size())});
      continue;
    }

    RawClimateRecord rec;
    rec.station_id = std::string(trim(cells[std::size_t(station_col)]));
    if (rec.station_id.empty()) rec.station_id = meta.station_id;
    if (rec.station_id.empty()) {
      result.diagnostics.push_back({DiagnosticKind::BadRow, line_no, "row has no station_id"});
      continue;
    }

    const auto date = parse_date(trim(cells[std::size_t(date_col)]));
    if (!date) {
      result.diagnostics.push_back({DiagnosticKind::BadRow, line_no,
                                    "unparseable date '" + std::string(trim(cells[std::size_t(date_col)])) + "'"});
      continue;
    }
    rec.date = *date;

    for (int f = 0; f < kSensorFieldCount; ++f) {
      const std::string_view cell = trim(cells[std::size_t(field_col[std::size_t(f)])]);
      if (cell.empty()) {
        result.diagnostics.push_back({DiagnosticKind::EmptyCell, line_no,
                                      std::string(kFieldNames[std::size_t(f)]) + " empty, treated as missing"});
        continue;
      }
      double v = 0.0;
      if (parse_double(cell, v)) {
        rec.values[f] = v;
      } else {
        result.diagnostics.push_back({DiagnosticKind::UnparseableCell, line_no,
                                      std::string(kFieldNames[std::size_t(f)]) + " unparseable '" +
                                          std::string(cell) + "', treated as missing"});
      }
    }

    const auto key = std::make_pair(rec.station_id, rec.date);
    if (auto it = seen.find(key); it != seen.end()) {
      result.diagnostics.push_back({DiagnosticKind::DuplicateDay, line_no,
                                    "duplicate row for " + rec.station_id + " " + format_date(rec.date) +
                                        ", later row wins"});
      result.records[it->second] = std::move(rec);
    } else {
      seen.emplace(key, result.records.size());
      result.records.push_back(std::move(rec));
    }
  }

  if (result.records.empty()) throw InputError("climate CSV: no data rows");

  std::sort(result.records.begin(), result.records.end(),
            [](const RawClimateRecord& a, const RawClimateRecord& b) {
              return std::tie(a.station_id, a.date) < std::tie(b.station_id, b.date);
            });
  return result;
}

std::string write_climate_csv(std::span<const RawClimateRecord> records) {
  std::ostringstream out;
  out << "station_id,date";
  for (const char* name : kFieldNames) out << ',' << name;
  out << '\n';
  for (const RawClimateRecord& r : records) {
    out << r.station_id << ',' << format_date(r.date);
    for (int f = 0; f < kSensorFieldCount; ++f) {
      out << ',';
      if (!is_missing(r.values[f])) out << format_double(r.values[f]);
    }
    out << '\n';
  }
  return out.str();
}

std::vector<Violation> validate_record(const RawClimateRecord& r) {
  std::vector<Violation> out;
  // A reading that already failed its range check is excluded from ordering
  // checks: cascading it would implicate (and later blank) a healthy field.
  std::array<bool, kSensorFieldCount> out_of_range{};
  const auto present = [&](SensorField f) { return !is_missing(r[f]); };
  const auto range = [&](SensorField f, double lo, double hi, bool hi_open, const char* what) {
    if (!present(f)) return;
    const double v = r[f];
    if (v < lo || (hi_open ? v >= hi : v > hi)) {
      out_of_range[std::size_t(f)] = true;
      out.push_back({{f}, std::string(sensor_field_name(f)) + " " + what});
    }
  };
  const auto ordered = [&](SensorField lo, SensorField hi) {
    if (out_of_range[std::size_t(lo)] || out_of_range[std::size_t(hi)]) return;
    if (present(lo) && present(hi) && r[lo] > r[hi]) {
      out.push_back({{lo, hi}, std::string(sensor_field_name(lo)) + " > " + sensor_field_name(hi)});
    }
  };

  range(SensorField::WdAvg, 0.0, 360.0, true, "outside [0,360)");
  range(SensorField::WsAvg, 0.0, std::numeric_limits<double>::infinity(), false, "negative");
  range(SensorField::WsMax, 0.0, std::numeric_limits<double>::infinity(), false, "negative");
  range(SensorField::SrAvg, 0.0, std::numeric_limits<double>::infinity(), false, "negative");
  range(SensorField::Rainfall, 0.0, std::numeric_limits<double>::infinity(), false, "negative");
  range(SensorField::RhMin, 0.0, 100.0, false, "outside [0,100]");
  range(SensorField::RhAvg, 0.0, 100.0, false, "outside [0,100]");
  range(SensorField::RhMax, 0.0, 100.0, false, "outside [0,100]");
  ordered(SensorField::RhMin, SensorField::RhAvg);
  ordered(SensorField::RhAvg, SensorField::RhMax);
  ordered(SensorField::AtMin, SensorField::AtAvg);
  ordered(SensorField::AtAvg, SensorField::AtMax);
  ordered(SensorField::WsAvg, SensorField::WsMax);
  ordered(SensorField::DMin, SensorField::DAvg);
  return out;
}

std::vector<Violation> demote_invalid(RawClimateRecord& r) {
  // Broken sensors emit garbage; the pipeline treats it as missing and lets
  // interpolation take over, rather than rejecting whole records.
  auto violations = validate_record(r);
  for (const Violation& v : violations) {
    for (SensorField f : v.fields) r[f] = missing_value();
  }
  return violations;
}

StationSeries make_station_series(std::span<const RawClimateRecord> records) {
  if (records.empty()) throw InputError("make_station_series: no records");
  StationSeries s;
  s.station_id = records.front().station_id;
  Date lo = records.front().date, hi = records.front().date;
  for (const auto& r : records) {
    if (r.station_id != s.station_id) {
      throw InputError("make_station_series: records span several stations");
    }
    lo = std::min(lo, r.date);
    hi = std::max(hi, r.date);
  }
  const Eigen::Index n = (hi - lo).count() + 1;
  s.start = lo;
  s.values = Eigen::ArrayXXd::Constant(n, kSensorFieldCount, missing_value());
  for (const auto& r : records) {
    s.values.row((r.date - lo).count()) = r.values.transpose();
  }
  return s;
}

std::vector<StationSeries> group_into_series(std::span<const RawClimateRecord> records) {
  std::map<std::string, std::vector<RawClimateRecord>> by_station;
  for (const auto& r : records) by_station[r.station_id].push_back(r);
  std::vector<StationSeries> out;
  out.reserve(by_station.size());
  for (auto& [id, recs] : by_station) {
    std::sort(recs.begin(), recs.end(),
              [](const RawClimateRecord& a, const RawClimateRecord& b) { return a.date < b.date; });
    out.push_back(make_station_series(recs));
  }
  return out;
}

GapReport interpolate_gaps(StationSeries& series, int max_gap) {
  if (max_gap < 1) throw InputError("interpolate_gaps: max_gap must be >= 1");
  GapReport report;
  report.station_id = series.station_id;
  const Eigen::Index n = series.days();

  for (int f = 0; f < kSensorFieldCount; ++f) {
    auto col = series.values.col(f);
    Eigen::Index i = 0;
    while (i < n) {
      if (!is_missing(col[i])) {
        ++i;
        continue;
      }
      Eigen::Index j = i;
      while (j + 1 < n && is_missing(col[j + 1])) ++j;

      GapSpan span{SensorField(f), series.date_at(i), series.date_at(j), RepairStatus::Unrepairable};
      const bool interior = i > 0 && j + 1 < n;
      if (interior && span.length_days() <= max_gap) {
        const double a = col[i - 1];
        const double b = col[j + 1];
        const double run = double(j + 1 - (i - 1));
        for (Eigen::Index k = i; k <= j; ++k) {
          col[k] = a + (b - a) * double(k - (i - 1)) / run;
        }
        span.status = RepairStatus::Interpolated;
      }
      report.spans.push_back(span);
      i = j + 1;
    }
  }

  std::sort(report.spans.begin(), report.spans.end(), [](const GapSpan& a, const GapSpan& b) {
    return std::tie(a.field, a.first_missing) < std::tie(b.field, b.first_missing);
  });
  return report;
}

}  // namespace sunncast
