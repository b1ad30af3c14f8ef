#include "sunncast/features.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <map>
#include <sstream>

namespace sunncast {

namespace {

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

int acc_index_of(SensorField f) {
  for (int i = 0; i < kAccFieldCount; ++i) {
    if (kAccumulableFields[std::size_t(i)] == f) return i;
  }
  return -1;
}

}  // namespace

void SeasonClock::validate() const {
  if (cycle_start_doy < 1 || cycle_start_doy > 366) {
    throw InputError("cycle start must be a day-of-year in 1..366");
  }
}

std::optional<PhaseLabel> phase_from_int(int v) {
  if (v < 1 || v > 3) return std::nullopt;
  return PhaseLabel(v);
}

std::optional<NymphStageRatios> counts_to_ratios(const std::array<std::int64_t, 5>& counts) {
  std::int64_t total = 0;
  for (std::int64_t c : counts) {
    if (c < 0) throw InputError("nymph counts must be non-negative");
    total += c;
  }
  if (total == 0) return std::nullopt;
  NymphStageRatios out;
  for (int i = 0; i < 5; ++i) out.r[i] = double(counts[std::size_t(i)]) / double(total);
  return out;
}

AccumulateResult accumulate_season(const StationSeries& series, SeasonClock clock) {
  clock.validate();
  AccumulateResult result;
  Eigen::Array<double, kAccFieldCount, 1> acc = Eigen::Array<double, kAccFieldCount, 1>::Zero();

  for (Eigen::Index day = 0; day < series.days(); ++day) {
    const Date date = series.date_at(day);
    if (day_of_year(date) == clock.cycle_start_doy) acc.setZero();

    Eigen::Array<double, kAccFieldCount, 1> raw;
    bool complete = true;
    for (int i = 0; i < kAccFieldCount; ++i) {
      raw[i] = series.at(day, kAccumulableFields[std::size_t(i)]);
      complete = complete && !is_missing(raw[i]);
    }
    if (!complete) {
      ++result.dropped_days;
      continue;
    }
    acc += raw;
    AccumulatedRecord rec;
    rec.station_id = series.station_id;
    rec.date = date;
    rec.values = acc;
    result.records.push_back(std::move(rec));
  }
  return result;
}

std::optional<ModelId> model_id_from_name(std::string_view name) {
  if (name == "m1") return ModelId::M1Raw;
  if (name == "m2") return ModelId::M2Accumulated;
  if (name == "m3") return ModelId::M3AccumulatedReduced;
  return std::nullopt;
}

const char* model_id_name(ModelId id) {
  switch (id) {
    case ModelId::M1Raw: return "m1";
    case ModelId::M2Accumulated: return "m2";
    case ModelId::M3AccumulatedReduced: return "m3";
  }
  return "?";
}

FeatureSetSpec FeatureSetSpec::standard(ModelId id) {
  FeatureSetSpec spec;
  spec.id = id;
  switch (id) {
    case ModelId::M1Raw:
      for (SensorField f : kAccumulableFields) spec.fields.emplace_back(sensor_field_name(f));
      break;
    case ModelId::M2Accumulated:
      for (SensorField f : kAccumulableFields) {
        spec.fields.push_back(std::string("acc_") + sensor_field_name(f));
      }
      break;
    case ModelId::M3AccumulatedReduced:
      // M2 minus the dewpoint and wind-speed fields.
      for (const char* name : {"acc_sr_avg", "acc_rainfall", "acc_rh_avg", "acc_at_min",
                               "acc_at_avg", "acc_at_max"}) {
        spec.fields.emplace_back(name);
      }
      break;
  }
  return spec;
}

LabelParseResult parse_label_csv(std::istream& in) {
  LabelParseResult result;
  std::string line;
  if (!std::getline(in, line)) throw InputError("label CSV: empty input, header expected");

  static constexpr std::array<const char*, 8> kHeader = {"station_id", "date", "phase",
                                                         "n1", "n2", "n3", "n4", "n5"};
  const auto header_cells = split_csv_line(line);
  std::array<int, 8> col;
  col.fill(-1);
  for (std::size_t c = 0; c < header_cells.size(); ++c) {
    const std::string_view name = trim(header_cells[c]);
    bool known = false;
    for (std::size_t i = 0; i < kHeader.size(); ++i) {
      if (name == kHeader[i]) {
        col[i] = int(c);
        known = true;
        break;
      }
    }
    if (!known) throw InputError("label CSV: unknown header column '" + std::string(name) + "'");
  }
  for (std::size_t i = 0; i < kHeader.size(); ++i) {
    if (col[i] < 0) throw InputError(std::string("label CSV: header missing column '") + kHeader[i] + "'");
  }
  const std::size_t n_cols = header_cells.size();

  std::map<std::pair<std::string, Date>, std::size_t> seen;
  long line_no = 1;
  bool saw_data_line = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    saw_data_line = true;
    const auto cells = split_csv_line(line);
    if (cells.size() != n_cols) {
      result.diagnostics.push_back({DiagnosticKind::BadRow, line_no, "wrong cell count"});
      continue;
    }

    LabelRecord rec;
    rec.station_id = std::string(trim(cells[std::size_t(col[0])]));
    const auto date = parse_date(trim(cells[std::size_t(col[1])]));
    if (rec.station_id.empty() || !date) {
      result.diagnostics.push_back({DiagnosticKind::BadRow, line_no, "bad station_id or date"});
      continue;
    }
    rec.date = *date;

    int phase_raw = 0;
    const std::string_view phase_cell = trim(cells[std::size_t(col[2])]);
    auto [pp, pe] = std::from_chars(phase_cell.data(), phase_cell.data() + phase_cell.size(), phase_raw);
    const auto phase = (pe == std::errc{} && pp == phase_cell.data() + phase_cell.size())
                           ? phase_from_int(phase_raw)
                           : std::nullopt;
    if (!phase) {
      result.diagnostics.push_back({DiagnosticKind::BadRow, line_no,
                                    "phase must be 1, 2 or 3, got '" + std::string(phase_cell) + "'"});
      continue;
    }
    rec.phase = *phase;

    std::array<std::int64_t, 5> counts{};
    int n_present = 0;
    bool counts_ok = true;
    for (int i = 0; i < 5; ++i) {
      const std::string_view cell = trim(cells[std::size_t(col[std::size_t(3 + i)])]);
      if (cell.empty()) continue;
      std::int64_t v = 0;
      auto [cp, ce] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (ce != std::errc{} || cp != cell.data() + cell.size() || v < 0) {
        counts_ok = false;
        break;
      }
      counts[std::size_t(i)] = v;
      ++n_present;
    }
    if (!counts_ok || (n_present != 0 && n_present != 5)) {
      result.diagnostics.push_back({DiagnosticKind::BadRow, line_no,
                                    "counts must be five non-negative integers or all empty"});
      continue;
    }
    if (n_present == 5) rec.counts = counts;

    const auto key = std::make_pair(rec.station_id, rec.date);
    if (auto it = seen.find(key); it != seen.end()) {
      result.diagnostics.push_back({DiagnosticKind::DuplicateDay, line_no,
                                    "duplicate label for " + rec.station_id + " " + format_date(rec.date)});
      result.records[it->second] = std::move(rec);
    } else {
      seen.emplace(key, result.records.size());
      result.records.push_back(std::move(rec));
    }
  }
  // Rows that were all rejected still count as data: the caller sees the
  // diagnostics and an empty record list rather than a hard error.
  if (!saw_data_line) throw InputError("label CSV: no data rows");

  std::sort(result.records.begin(), result.records.end(),
            [](const LabelRecord& a, const LabelRecord& b) {
              return std::tie(a.station_id, a.date) < std::tie(b.station_id, b.date);
            });
  return result;
}

std::string write_label_csv(std::span<const LabelRecord> records) {
  std::ostringstream out;
  out << "station_id,date,phase,n1,n2,n3,n4,n5\n";
  for (const LabelRecord& r : records) {
    out << r.station_id << ',' << format_date(r.date) << ',' << int(r.phase);
    for (int i = 0; i < 5; ++i) {
      out << ',';
      if (r.counts) out << (*r.counts)[std::size_t(i)];
    }
    out << '\n';
  }
  return out.str();
}

long Dataset::regression_rows() const {
  long n = 0;
  for (const auto& r : ratios) n += r.has_value() ? 1 : 0;
  return n;
}

std::vector<FieldRef> resolve_fields(const FeatureSetSpec& spec) {
  std::vector<FieldRef> refs;
  refs.reserve(spec.fields.size());
  for (const std::string& name : spec.fields) {
    if (name.starts_with("acc_")) {
      const auto f = sensor_field_from_name(std::string_view(name).substr(4));
      const int idx = f ? acc_index_of(*f) : -1;
      if (idx < 0) throw InputError("unknown accumulated feature '" + name + "'");
      refs.push_back({true, idx});
    } else {
      const auto f = sensor_field_from_name(name);
      if (!f) throw InputError("unknown raw feature '" + name + "'");
      refs.push_back({false, int(*f)});
    }
  }
  return refs;
}

Dataset build_dataset(std::span<const AccumulatedRecord> acc,
                      std::span<const StationSeries> raw,
                      std::span<const LabelRecord> labels,
                      const FeatureSetSpec& spec) {
  const std::vector<FieldRef> refs = resolve_fields(spec);

  std::map<std::pair<std::string_view, Date>, const AccumulatedRecord*> acc_index;
  for (const AccumulatedRecord& r : acc) acc_index[{r.station_id, r.date}] = &r;
  std::map<std::string_view, const StationSeries*> series_index;
  for (const StationSeries& s : raw) series_index[s.station_id] = &s;

  Dataset ds;
  ds.spec = spec;
  const int m = spec.size();
  std::vector<Eigen::VectorXd> rows;
  for (const LabelRecord& label : labels) {
    Eigen::VectorXd x(m);
    bool complete = true;
    const AccumulatedRecord* acc_rec = nullptr;
    if (auto it = acc_index.find({label.station_id, label.date}); it != acc_index.end()) {
      acc_rec = it->second;
    }
    const StationSeries* series = nullptr;
    if (auto it = series_index.find(label.station_id); it != series_index.end()) {
      series = it->second;
    }

    for (int j = 0; j < m && complete; ++j) {
      const FieldRef ref = refs[std::size_t(j)];
      if (ref.accumulated) {
        if (!acc_rec) {
          complete = false;
          break;
        }
        x[j] = acc_rec->values[ref.index];
      } else {
        const long off = series ? (label.date - series->start).count() : -1;
        if (!series || off < 0 || off >= series->days()) {
          complete = false;
          break;
        }
        const double v = series->values(off, ref.index);
        if (is_missing(v)) {
          complete = false;
          break;
        }
        x[j] = v;
      }
    }

    if (!complete) {
      ++ds.dropped;
      continue;
    }
    rows.push_back(std::move(x));
    ds.phases.push_back(label.phase);
    ds.ratios.push_back(label.counts ? counts_to_ratios(*label.counts) : std::nullopt);
    ds.station_ids.push_back(label.station_id);
    ds.dates.push_back(label.date);
  }

  if (rows.empty()) throw InputError("build_dataset: no labelled day has complete features");
  ds.features.resize(Eigen::Index(rows.size()), m);
  for (Eigen::Index i = 0; i < ds.features.rows(); ++i) ds.features.row(i) = rows[std::size_t(i)];
  return ds;
}

}  // namespace sunncast
