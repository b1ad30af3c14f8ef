#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sunncast/climate.hpp"
#include "sunncast/dates.hpp"
#include "sunncast/errors.hpp"
#include "sunncast/eval.hpp"
#include "sunncast/forecast.hpp"
#include "sunncast/rng.hpp"
#include "sunncast/synth.hpp"

using namespace sunncast;

namespace {

NymphStageRatios ratios_of(double a, double b, double c, double d, double e) {
  NymphStageRatios r;
  r.r << a, b, c, d, e;
  return r;
}

struct MiniWorld {
  std::vector<StationSeries> series;
  std::vector<LabelRecord> labels;
  ModelBundle bundle;
};

// One synthetic station-year pushed through the real pipeline and training.
MiniWorld trained_world() {
  SynthConfig cfg;
  cfg.years = 2;
  cfg.stations = 1;
  cfg.missing_rate = 0.0;
  const SynthSeason season = generate_seasons(cfg);

  MiniWorld w;
  std::istringstream climate(season.climate_csv);
  const ParseResult parsed = parse_climate_csv(climate, {"", SiteKind::WheatField, ""});
  w.series = group_into_series(parsed.records);
  std::istringstream labels(season.labels_csv);
  w.labels = parse_label_csv(labels).records;

  const FeatureSetSpec spec = FeatureSetSpec::standard(ModelId::M2Accumulated);
  std::vector<AccumulatedRecord> acc;
  for (const StationSeries& s : w.series) {
    const AccumulateResult r = accumulate_season(s, SeasonClock{1});
    acc.insert(acc.end(), r.records.begin(), r.records.end());
  }
  const Dataset ds = build_dataset(acc, w.series, w.labels, spec);

  TrainParams params;
  params.rng_seed = 3;
  w.bundle.spec = spec;
  w.bundle.clock = SeasonClock{1};
  w.bundle.params = params;
  w.bundle.phase_tree = train_phase_tree(ds, params);
  w.bundle.ratios = train_ratio_predictor(ds, params);
  return w;
}

}  // namespace

TEST_CASE("warning_decision implements the rule table") {
  const WarningRule rule;

  CHECK(warning_decision(PhaseLabel::WinterQuarters, ratios_of(0, 0.3, 0.3, 0.2, 0.2), rule) ==
        WarningStatus::NoAction);
  CHECK(warning_decision(PhaseLabel::Migration, ratios_of(0, 0.5, 0.5, 0, 0), rule) ==
        WarningStatus::NoAction);
  CHECK(warning_decision(PhaseLabel::WheatField, ratios_of(0, 0.3, 0.3, 0.2, 0.2), rule) ==
        WarningStatus::SprayWindow);  // watched mass 0.6 >= 0.55
  CHECK(warning_decision(PhaseLabel::WheatField, ratios_of(0.8, 0.1, 0.1, 0, 0), rule) ==
        WarningStatus::NoAction);  // 0.2 < 0.275
  CHECK(warning_decision(PhaseLabel::WheatField, ratios_of(0.6, 0.2, 0.2, 0, 0), rule) ==
        WarningStatus::Watch);  // 0.4 in [0.275, 0.55)

  WarningRule open_gate;
  open_gate.require_phase3 = false;
  CHECK(warning_decision(PhaseLabel::WinterQuarters, ratios_of(0, 0.3, 0.3, 0.2, 0.2),
                         open_gate) == WarningStatus::SprayWindow);
  // Watch still needs phase 3 even with the gate off.
  CHECK(warning_decision(PhaseLabel::WinterQuarters, ratios_of(0.6, 0.2, 0.2, 0, 0),
                         open_gate) == WarningStatus::NoAction);

  WarningRule stage5;
  stage5.watched_stages = {5};
  stage5.threshold = 0.4;
  CHECK(warning_decision(PhaseLabel::WheatField, ratios_of(0, 0, 0.3, 0.3, 0.4), stage5) ==
        WarningStatus::SprayWindow);
}

TEST_CASE("warning is monotone in watched mass") {
  const WarningRule rule;
  SplitMix64 rng(61);
  const auto rank = [](WarningStatus s) { return int(s); };
  for (int trial = 0; trial < 200; ++trial) {
    double mass = rng.next_double();
    double grown = mass + (1.0 - mass) * rng.next_double();
    const auto spread = [](double total) {
      return ratios_of(1.0 - total, total / 2.0, total / 2.0, 0.0, 0.0);
    };
    const WarningStatus lo = warning_decision(PhaseLabel::WheatField, spread(mass), rule);
    const WarningStatus hi = warning_decision(PhaseLabel::WheatField, spread(grown), rule);
    CHECK(rank(hi) >= rank(lo));
  }
}

TEST_CASE("warning rule validation") {
  WarningRule rule;
  rule.watched_stages = {};
  CHECK_THROWS_AS(rule.validate(), InputError);
  rule = WarningRule{};
  rule.watched_stages = {2, 2};
  CHECK_THROWS_AS(rule.validate(), InputError);
  rule = WarningRule{};
  rule.watched_stages = {0, 3};
  CHECK_THROWS_AS(rule.validate(), InputError);
  rule = WarningRule{};
  rule.threshold = 0.0;
  CHECK_THROWS_AS(rule.validate(), InputError);
  rule = WarningRule{};
  rule.threshold = 1.0;
  CHECK_NOTHROW(rule.validate());
}

TEST_CASE("forecast_range walks the season day by day") {
  const MiniWorld w = trained_world();
  const Date from = *parse_date("2015-02-01");
  const Date to = *parse_date("2015-03-01");
  const ForecastResult result = forecast_range(w.bundle, w.series, from, to, WarningRule{});
  CHECK(result.days.size() == 29);
  CHECK(result.skipped.empty());
  for (std::size_t i = 0; i < result.days.size(); ++i) {
    CHECK(result.days[i].date == from + std::chrono::days{long(i)});
    CHECK(result.days[i].station_id == "ST01");
  }
  // Early February is deep in winter quarters: phase 1, no warning.
  CHECK(result.days.front().phase == PhaseLabel::WinterQuarters);
  CHECK(result.days.front().warning == WarningStatus::NoAction);
  CHECK(result.rule.threshold == 0.55);
}

TEST_CASE("training-period forecasts reproduce the training labels") {
  const MiniWorld w = trained_world();
  std::map<Date, PhaseLabel> truth;
  for (const LabelRecord& l : w.labels) truth[l.date] = l.phase;
  const ForecastResult result =
      forecast_range(w.bundle, w.series, *parse_date("2015-01-01"), *parse_date("2015-12-31"),
                     WarningRule{});
  CHECK(result.days.size() == 365);
  for (const DailyForecast& day : result.days) {
    CHECK(day.phase == truth.at(day.date));
  }
}

TEST_CASE("forecast_range rejects impossible requests") {
  const MiniWorld w = trained_world();
  CHECK_THROWS_WITH_AS(forecast_range(w.bundle, w.series, *parse_date("2016-05-02"),
                                      *parse_date("2016-05-01"), WarningRule{}),
                       doctest::Contains("after"), InputError);
  CHECK_THROWS_AS(forecast_range(w.bundle, {}, *parse_date("2016-05-01"),
                                 *parse_date("2016-05-02"), WarningRule{}),
                  InputError);
  // A range before any usable data names the earliest usable date.
  CHECK_THROWS_WITH_AS(forecast_range(w.bundle, w.series, *parse_date("2010-01-01"),
                                      *parse_date("2010-02-01"), WarningRule{}),
                       doctest::Contains("2015-01-01"), InputError);
}

TEST_CASE("mid-season station start defers to the next cycle start") {
  const MiniWorld w = trained_world();
  // Chop the series so it starts mid-season: accumulation cannot restart
  // until the next January 1st.
  StationSeries cut = w.series.front();
  const long offset = (*parse_date("2015-06-01") - cut.start).count();
  const long rest = cut.values.rows() - offset;
  StationSeries tail;
  tail.station_id = cut.station_id;
  tail.start = *parse_date("2015-06-01");
  tail.values = cut.values.bottomRows(rest);
  std::vector<StationSeries> series{tail};

  const ForecastResult ok = forecast_range(w.bundle, series, *parse_date("2016-01-01"),
                                           *parse_date("2016-01-10"), WarningRule{});
  CHECK(ok.days.size() == 10);

  CHECK_THROWS_WITH_AS(forecast_range(w.bundle, series, *parse_date("2015-07-01"),
                                      *parse_date("2015-07-10"), WarningRule{}),
                       doctest::Contains("2016-01-01"), InputError);
}
