#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sunncast/bundle.hpp"
#include "sunncast/climate.hpp"
#include "sunncast/features.hpp"
#include "sunncast/tree.hpp"

namespace sunncast {

enum class WarningStatus { NoAction, Watch, SprayWindow };

const char* warning_status_name(WarningStatus s);

/// Operator configuration for the spray decision. The defaults (stages
/// {2,3}, 55% mass, phase-3 gate) are practice defaults, not measured
/// ground truth; field use needs agronomist sign-off.
struct WarningRule {
  std::vector<int> watched_stages = {2, 3};  // 1..5, non-empty
  double threshold = 0.55;                   // (0, 1]
  bool require_phase3 = true;

  void validate() const;
};

/// Pure daily decision, no hysteresis:
///   SprayWindow  when (phase 3 or the gate is off) and watched mass >= threshold
///   Watch        when phase 3 and watched mass >= threshold/2
///   NoAction     otherwise
WarningStatus warning_decision(PhaseLabel phase, const NymphStageRatios& ratios,
                               const WarningRule& rule);

struct DailyForecast {
  std::string station_id;
  Date date{};
  PhaseLabel phase = PhaseLabel::WinterQuarters;
  Eigen::VectorXd phase_distribution;
  NymphStageRatios ratios;
  bool ratios_degenerate = false;
  WarningStatus warning = WarningStatus::NoAction;
};

struct ForecastResult {
  std::vector<DailyForecast> days;  // station then date
  std::vector<std::string> skipped;  // in-range days without usable features
  WarningRule rule;
};

/// Predicts every station-day in [from, to]. Accumulated features are
/// rebuilt from each season's start inside the provided series; a range
/// whose season start precedes the data fails, naming the earliest usable
/// date. Throws when no day in the range is forecastable.
ForecastResult forecast_range(const ModelBundle& bundle,
                              std::span<const StationSeries> series, Date from, Date to,
                              const WarningRule& rule);

}  // namespace sunncast
