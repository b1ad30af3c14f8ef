#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sunncast/climate.hpp"
#include "sunncast/features.hpp"

namespace sunncast {

/// Generator settings. The phase thresholds over accumulated solar
/// radiation are the published decision boundaries; curve shapes and noise
/// are invented plumbing so the pipeline has labelled data to run on.
struct SynthConfig {
  int years = 4;
  int stations = 2;
  int start_year = 2015;
  std::uint64_t rng_seed = 7;

  double phase_t1 = 44533.0;  // W/m^2*day: below is phase 1
  double phase_t2 = 57912.0;  // W/m^2*day: above is phase 3

  /// Uniform observation noise, bounded by +-2x the scale, indexed by
  /// SensorField. Truth stays noiseless; only emitted readings wobble.
  Eigen::Array<double, kSensorFieldCount, 1> noise_scale = default_noise_scales();

  double missing_rate = 0.02;  // per-cell missing probability, in [0, 0.2]

  int nymph_window_days = 70;     // counted days after the phase-3 arrival
  double nymph_stage_width = 14;  // bell width of each stage's weight
  long count_base = 120;          // insects counted per day, +-10 jitter

  static Eigen::Array<double, kSensorFieldCount, 1> default_noise_scales();
  void validate() const;
};

/// Per-day hidden state the generator committed to, for oracle replay.
struct SynthTruthDay {
  std::string station_id;
  Date date{};
  double sr_true = 0.0;      // noiseless daily solar radiation
  double acc_sr_true = 0.0;  // noiseless accumulation incl. this day
  PhaseLabel phase = PhaseLabel::WinterQuarters;
  std::optional<NymphStageRatios> ratios;  // exact oracle output, pre-rounding
};

struct SynthInjectedGap {
  std::string station_id;
  SensorField field = SensorField::WdAvg;
  Date first{};
  int length = 0;
};

struct SynthTruth {
  std::vector<SynthTruthDay> days;       // station then date order
  std::vector<SynthInjectedGap> gaps;    // runs of injected missing cells
};

struct SynthSeason {
  std::string climate_csv;
  std::string labels_csv;
  SynthTruth truth;
};

/// Phase from noiseless accumulated solar radiation: 1 below t1, 3 above
/// t2, 2 in between (boundaries inclusive to phase 2).
PhaseLabel phase_oracle(double acc_sr, const SynthConfig& cfg);

/// Five-way soft stage assignment: stage centres equally spaced across the
/// counting window, Gaussian weight in (day - centre), normalised to sum 1.
NymphStageRatios nymph_ratio_oracle(int days_since_phase3, const SynthConfig& cfg);

/// Emits the full corpus: per station-year, smooth seasonal curves plus
/// seeded bounded noise, labels from the oracles on the noiseless signal,
/// missing cells injected at the configured rate. Deterministic per config.
SynthSeason generate_seasons(const SynthConfig& cfg);

}  // namespace sunncast
