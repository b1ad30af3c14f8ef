#include "sunncast/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

namespace sunncast {

LoadedInputs load_inputs(std::span<const std::string> climate_paths,
                         const std::string& labels_path, int max_gap_days) {
  if (climate_paths.empty()) throw InputError("at least one climate file is required");

  LoadedInputs out;
  std::vector<RawClimateRecord> merged;
  for (const std::string& path : climate_paths) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read climate file " + path);
    StationMeta meta;
    meta.station_id = std::filesystem::path(path).stem().string();
    ParseResult parsed = parse_climate_csv(in, meta);
    for (ParseDiagnostic& d : parsed.diagnostics) {
      d.message = path + ": " + d.message;
      out.climate_diagnostics.push_back(std::move(d));
    }
    merged.insert(merged.end(), std::make_move_iterator(parsed.records.begin()),
                  std::make_move_iterator(parsed.records.end()));
  }

  // Merge across files: later files win duplicate station-days.
  std::map<std::pair<std::string, Date>, std::size_t> position;
  std::vector<RawClimateRecord> records;
  for (RawClimateRecord& r : merged) {
    const auto key = std::make_pair(r.station_id, r.date);
    if (const auto it = position.find(key); it != position.end()) {
      out.climate_diagnostics.push_back(
          {DiagnosticKind::DuplicateDay, 0,
           r.station_id + " " + format_date(r.date) + " appears in several files; keeping the last"});
      records[it->second] = std::move(r);
    } else {
      position.emplace(key, records.size());
      records.push_back(std::move(r));
    }
  }

  for (RawClimateRecord& r : records) {
    for (const Violation& v : demote_invalid(r)) {
      out.demoted_fields += static_cast<long>(v.fields.size());
      out.climate_diagnostics.push_back({DiagnosticKind::InvalidValue, 0,
                                         r.station_id + " " + format_date(r.date) + ": " +
                                             v.message});
    }
  }

  std::sort(records.begin(), records.end(), [](const RawClimateRecord& a,
                                               const RawClimateRecord& b) {
    return a.station_id != b.station_id ? a.station_id < b.station_id : a.date < b.date;
  });
  out.series = group_into_series(records);
  for (StationSeries& s : out.series) {
    out.gaps.push_back(interpolate_gaps(s, max_gap_days));
  }

  if (!labels_path.empty()) {
    std::ifstream in(labels_path);
    if (!in) throw InputError("cannot read label file " + labels_path);
    LabelParseResult parsed = parse_label_csv(in);
    out.labels = std::move(parsed.records);
    out.label_diagnostics = std::move(parsed.diagnostics);
  }
  return out;
}

Dataset dataset_from(const LoadedInputs& inputs, const FeatureSetSpec& spec, SeasonClock clock,
                     long* dropped_days) {
  clock.validate();
  if (inputs.labels.empty()) throw InputError("no labels: a label file is required here");
  std::vector<AccumulatedRecord> acc;
  long dropped = 0;
  for (const StationSeries& s : inputs.series) {
    AccumulateResult r = accumulate_season(s, clock);
    dropped += r.dropped_days;
    acc.insert(acc.end(), std::make_move_iterator(r.records.begin()),
               std::make_move_iterator(r.records.end()));
  }
  if (dropped_days) *dropped_days = dropped;
  return build_dataset(acc, inputs.series, inputs.labels, spec);
}

}  // namespace sunncast
