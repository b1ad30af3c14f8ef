#include "sunncast/forecast.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "sunncast/dates.hpp"

namespace sunncast {

const char* warning_status_name(WarningStatus s) {
  switch (s) {
    case WarningStatus::NoAction: return "no_action";
    case WarningStatus::Watch: return "watch";
    case WarningStatus::SprayWindow: return "spray_window";
  }
  return "no_action";
}

void WarningRule::validate() const {
  if (watched_stages.empty()) throw InputError("warning rule needs at least one watched stage");
  std::set<int> seen;
  for (int s : watched_stages) {
    if (s < 1 || s > 5) throw InputError("watched stages must be in 1..5");
    if (!seen.insert(s).second) throw InputError("watched stages must not repeat");
  }
  if (!(threshold > 0.0) || threshold > 1.0) {
    throw InputError("warning threshold must be in (0, 1]");
  }
}

WarningStatus warning_decision(PhaseLabel phase, const NymphStageRatios& ratios,
                               const WarningRule& rule) {
  rule.validate();
  double mass = 0.0;
  for (int s : rule.watched_stages) mass += ratios[s];
  const bool in_phase3 = phase == PhaseLabel::WheatField;
  if ((in_phase3 || !rule.require_phase3) && mass >= rule.threshold) {
    return WarningStatus::SprayWindow;
  }
  if (in_phase3 && mass >= rule.threshold / 2.0) return WarningStatus::Watch;
  return WarningStatus::NoAction;
}

ForecastResult forecast_range(const ModelBundle& bundle,
                              std::span<const StationSeries> series, Date from, Date to,
                              const WarningRule& rule) {
  rule.validate();
  bundle.clock.validate();
  if (from > to) {
    throw InputError("empty date range: " + format_date(from) + " is after " + format_date(to));
  }
  if (series.empty()) throw InputError("no climate data to forecast from");

  const std::vector<FieldRef> refs = resolve_fields(bundle.spec);
  const bool needs_acc =
      std::any_of(refs.begin(), refs.end(), [](const FieldRef& r) { return r.accumulated; });

  ForecastResult out;
  out.rule = rule;
  std::optional<Date> earliest_usable;

  for (const StationSeries& st : series) {
    std::map<Date, const AccumulatedRecord*> acc_by_date;
    AccumulateResult acc;
    Date usable_from = st.start;
    if (needs_acc) {
      acc = accumulate_season(st, bundle.clock);
      for (const AccumulatedRecord& r : acc.records) acc_by_date[r.date] = &r;
      // Days before the first in-data season start would carry partial
      // sums; they are not forecastable.
      if (day_of_year(st.start) != bundle.clock.cycle_start_doy) {
        usable_from = next_day_of_year(st.start, bundle.clock.cycle_start_doy);
      }
    }
    if (!earliest_usable || usable_from < *earliest_usable) earliest_usable = usable_from;

    Eigen::VectorXd x(bundle.spec.size());
    for (Date d = from; d <= to; d += std::chrono::days{1}) {
      if (d < usable_from) {
        out.skipped.push_back(st.station_id + " " + format_date(d) +
                              ": before the first complete season in the data");
        continue;
      }
      const AccumulatedRecord* acc_rec = nullptr;
      if (needs_acc) {
        if (const auto it = acc_by_date.find(d); it != acc_by_date.end()) acc_rec = it->second;
      }
      const long off = (d - st.start).count();
      bool complete = true;
      for (int j = 0; j < bundle.spec.size() && complete; ++j) {
        const FieldRef ref = refs[std::size_t(j)];
        if (ref.accumulated) {
          if (!acc_rec) {
            complete = false;
          } else {
            x[j] = acc_rec->values[ref.index];
          }
        } else {
          const double v =
              (off >= 0 && off < st.days()) ? st.values(off, ref.index) : missing_value();
          if (is_missing(v)) {
            complete = false;
          } else {
            x[j] = v;
          }
        }
      }
      if (!complete) {
        out.skipped.push_back(st.station_id + " " + format_date(d) +
                              ": missing features for this day");
        continue;
      }

      DailyForecast fc;
      fc.station_id = st.station_id;
      fc.date = d;
      const PhasePrediction pp = predict_phase(bundle.phase_tree, x);
      fc.phase = pp.label;
      fc.phase_distribution = pp.distribution;
      const RatioPrediction rp = predict_ratios(bundle.ratios, x);
      fc.ratios = rp.ratios;
      fc.ratios_degenerate = rp.degenerate;
      fc.warning = warning_decision(fc.phase, fc.ratios, rule);
      out.days.push_back(std::move(fc));
    }
  }

  if (out.days.empty()) {
    std::string msg = "no forecastable day in " + format_date(from) + ".." + format_date(to);
    if (earliest_usable) {
      msg += "; earliest usable date in the given data is " + format_date(*earliest_usable);
    }
    throw InputError(msg);
  }
  return out;
}

}  // namespace sunncast
