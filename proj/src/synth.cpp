#include "sunncast/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "sunncast/rng.hpp"

namespace sunncast {

namespace {

constexpr double kTau = 6.283185307179586476925286766559;
constexpr double kYearDays = 365.25;

constexpr std::uint64_t kNoiseSalt = 400;
constexpr std::uint64_t kMissingSalt = 800;
constexpr std::uint64_t kCountSalt = 700;

double seasonal(double amplitude, double offset, int doy, int peak_shift_days) {
  return offset + amplitude * std::sin(kTau * (doy - peak_shift_days) / kYearDays);
}

/// Noiseless per-field values for one station-day. Pair gaps exceed 4x the
/// default noise bounds so independently noised fields keep the ordering
/// constraints validate_record checks.
Eigen::Array<double, kSensorFieldCount, 1> true_fields(int doy, int station_index) {
  const double si = station_index;
  const double sr = seasonal(150.0, 250.0 + 6.0 * si, doy, 81);
  const double at = seasonal(12.0, 11.0 + 0.4 * si, doy, 105);
  const double rh = seasonal(-15.0, 65.0 - 2.0 * si, doy, 105);
  const double ws = seasonal(1.0, 3.0 + 0.2 * si, doy, 30);
  const double rain = seasonal(2.0, 3.0 + 0.3 * si, doy, 330);
  const double wd = seasonal(60.0, 180.0 + 10.0 * si, doy, 150);
  const double dew = at - 4.0;

  Eigen::Array<double, kSensorFieldCount, 1> v;
  v[int(SensorField::WdAvg)] = wd;
  v[int(SensorField::WsAvg)] = ws;
  v[int(SensorField::WsMax)] = 1.5 * ws + 1.0;
  v[int(SensorField::SrAvg)] = sr;
  v[int(SensorField::Rainfall)] = rain;
  v[int(SensorField::DMin)] = dew - 3.0;
  v[int(SensorField::DAvg)] = dew;
  v[int(SensorField::RhMin)] = rh - 12.0;
  v[int(SensorField::RhAvg)] = rh;
  v[int(SensorField::RhMax)] = rh + 10.0;
  v[int(SensorField::AtMin)] = at - 4.5;
  v[int(SensorField::AtAvg)] = at;
  v[int(SensorField::AtMax)] = at + 5.5;
  return v;
}

std::string station_name(int station_index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "ST%02d", station_index + 1);
  return buf;
}

std::uint64_t station_year_key(const SynthConfig& cfg, int station_index, int year_index) {
  return mix64(cfg.rng_seed,
               (std::uint64_t(std::uint32_t(station_index)) << 32) | std::uint32_t(year_index));
}

}  // namespace

Eigen::Array<double, kSensorFieldCount, 1> SynthConfig::default_noise_scales() {
  Eigen::Array<double, kSensorFieldCount, 1> s;
  s[int(SensorField::WdAvg)] = 15.0;
  s[int(SensorField::WsAvg)] = 0.25;
  s[int(SensorField::WsMax)] = 0.4;
  s[int(SensorField::SrAvg)] = 8.0;
  s[int(SensorField::Rainfall)] = 0.4;
  s[int(SensorField::DMin)] = 0.6;
  s[int(SensorField::DAvg)] = 0.6;
  s[int(SensorField::RhMin)] = 1.5;
  s[int(SensorField::RhAvg)] = 1.5;
  s[int(SensorField::RhMax)] = 1.5;
  s[int(SensorField::AtMin)] = 0.6;
  s[int(SensorField::AtAvg)] = 0.6;
  s[int(SensorField::AtMax)] = 0.6;
  return s;
}

void SynthConfig::validate() const {
  if (years < 1) throw InputError("years must be at least 1");
  if (stations < 1) throw InputError("stations must be at least 1");
  if (start_year < 1800 || start_year > 2400) throw InputError("start_year out of range");
  if (!(phase_t1 > 0.0) || !(phase_t1 < phase_t2)) {
    throw InputError("phase thresholds need 0 < t1 < t2");
  }
  if ((noise_scale < 0.0).any()) throw InputError("noise scales must be non-negative");
  if (missing_rate < 0.0 || missing_rate > 0.2) {
    throw InputError("missing_rate must be in [0, 0.2]");
  }
  if (nymph_window_days < 5) throw InputError("nymph_window_days must be at least 5");
  if (!(nymph_stage_width > 0.0)) throw InputError("nymph_stage_width must be positive");
  if (count_base < 1) throw InputError("count_base must be at least 1");
}

PhaseLabel phase_oracle(double acc_sr, const SynthConfig& cfg) {
  if (acc_sr < cfg.phase_t1) return PhaseLabel::WinterQuarters;
  if (acc_sr > cfg.phase_t2) return PhaseLabel::WheatField;
  return PhaseLabel::Migration;
}

NymphStageRatios nymph_ratio_oracle(int days_since_phase3, const SynthConfig& cfg) {
  NymphStageRatios out;
  const double w = cfg.nymph_window_days;
  for (int s = 0; s < 5; ++s) {
    const double centre = (s + 0.5) * w / 5.0;
    const double z = (days_since_phase3 - centre) / cfg.nymph_stage_width;
    out.r[s] = std::exp(-0.5 * z * z);
  }
  out.r /= out.r.sum();
  return out;
}

SynthSeason generate_seasons(const SynthConfig& cfg) {
  cfg.validate();

  std::vector<RawClimateRecord> climate;
  std::vector<LabelRecord> labels;
  SynthTruth truth;

  for (int si = 0; si < cfg.stations; ++si) {
    const std::string sid = station_name(si);
    // Open gap runs per field, for the injected-gap report.
    std::array<int, kSensorFieldCount> run_len{};
    std::array<Date, kSensorFieldCount> run_start{};

    for (int yi = 0; yi < cfg.years; ++yi) {
      const int year = cfg.start_year + yi;
      const std::uint64_t key = station_year_key(cfg, si, yi);
      std::array<SplitMix64, kSensorFieldCount> noise_rng{
          SplitMix64(0), SplitMix64(0), SplitMix64(0), SplitMix64(0), SplitMix64(0),
          SplitMix64(0), SplitMix64(0), SplitMix64(0), SplitMix64(0), SplitMix64(0),
          SplitMix64(0), SplitMix64(0), SplitMix64(0)};
      std::array<SplitMix64, kSensorFieldCount> miss_rng = noise_rng;
      for (int f = 0; f < kSensorFieldCount; ++f) {
        noise_rng[f] = SplitMix64(mix64(key, kNoiseSalt + std::uint64_t(f)));
        miss_rng[f] = SplitMix64(mix64(key, kMissingSalt + std::uint64_t(f)));
      }
      SplitMix64 count_rng(mix64(key, kCountSalt));

      const Date first = *parse_date(std::to_string(year) + "-01-01");
      const Date last = *parse_date(std::to_string(year) + "-12-31");
      double acc_sr = 0.0;
      int phase3_day = -1;

      for (Date d = first; d <= last; d += std::chrono::days{1}) {
        const int doy = day_of_year(d);
        const auto base = true_fields(doy, si);
        const double sr_true = base[int(SensorField::SrAvg)];
        acc_sr += sr_true;
        const PhaseLabel phase = phase_oracle(acc_sr, cfg);

        SynthTruthDay td;
        td.station_id = sid;
        td.date = d;
        td.sr_true = sr_true;
        td.acc_sr_true = acc_sr;
        td.phase = phase;

        LabelRecord label;
        label.station_id = sid;
        label.date = d;
        label.phase = phase;
        if (phase == PhaseLabel::WheatField) {
          if (phase3_day < 0) phase3_day = 0;
          if (phase3_day < cfg.nymph_window_days) {
            const NymphStageRatios ratios = nymph_ratio_oracle(phase3_day, cfg);
            td.ratios = ratios;
            const long n = cfg.count_base + long(count_rng.next_below(21)) - 10;
            std::array<std::int64_t, 5> counts{};
            for (int s = 0; s < 5; ++s) {
              counts[s] = std::llround(ratios.r[s] * double(n));
            }
            label.counts = counts;
          }
          ++phase3_day;
        }

        RawClimateRecord rec;
        rec.station_id = sid;
        rec.date = d;
        for (int f = 0; f < kSensorFieldCount; ++f) {
          const double noise = cfg.noise_scale[f] * (4.0 * noise_rng[f].next_double() - 2.0);
          const bool missing = miss_rng[f].next_double() < cfg.missing_rate;
          if (missing) {
            if (run_len[f] == 0) run_start[f] = d;
            ++run_len[f];
          } else {
            if (run_len[f] > 0) {
              truth.gaps.push_back({sid, SensorField(f), run_start[f], run_len[f]});
              run_len[f] = 0;
            }
            rec.values[f] = base[f] + noise;
          }
        }

        climate.push_back(std::move(rec));
        labels.push_back(std::move(label));
        truth.days.push_back(std::move(td));
      }
    }
    for (int f = 0; f < kSensorFieldCount; ++f) {
      if (run_len[f] > 0) {
        truth.gaps.push_back({sid, SensorField(f), run_start[f], run_len[f]});
      }
    }
  }

  SynthSeason season;
  season.climate_csv = write_climate_csv(climate);
  season.labels_csv = write_label_csv(labels);
  season.truth = std::move(truth);
  return season;
}

}  // namespace sunncast
