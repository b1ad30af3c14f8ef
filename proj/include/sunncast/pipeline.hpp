#pragma once

#include <span>
#include <string>
#include <vector>

#include "sunncast/climate.hpp"
#include "sunncast/features.hpp"

namespace sunncast {

/// Everything the commands share after reading input files.
struct LoadedInputs {
  std::vector<StationSeries> series;  // validated, gap-repaired
  std::vector<GapReport> gaps;
  std::vector<ParseDiagnostic> climate_diagnostics;
  long demoted_fields = 0;  // readings blanked by validation
  std::vector<LabelRecord> labels;
  std::vector<ParseDiagnostic> label_diagnostics;
};

/// Reads climate CSVs (merged; on duplicate station-days the later file
/// wins), demotes invalid readings, builds per-station series and repairs
/// gaps up to max_gap_days. labels_path may be empty (prediction runs).
LoadedInputs load_inputs(std::span<const std::string> climate_paths,
                         const std::string& labels_path,
                         int max_gap_days = kDefaultMaxGapDays);

/// Accumulates every station under the clock and joins with the labels.
/// dropped_days, when given, receives the count of days accumulation
/// skipped for missing fields.
Dataset dataset_from(const LoadedInputs& inputs, const FeatureSetSpec& spec, SeasonClock clock,
                     long* dropped_days = nullptr);

}  // namespace sunncast
