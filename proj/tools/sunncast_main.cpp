#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sunncast/bundle.hpp"
#include "sunncast/dates.hpp"
#include "sunncast/errors.hpp"
#include "sunncast/eval.hpp"
#include "sunncast/forecast.hpp"
#include "sunncast/pipeline.hpp"
#include "sunncast/synth.hpp"

namespace {

using namespace sunncast;

struct CommonArgs {
  std::vector<std::string> climate;
  std::string labels;
  std::string model = "m2";
  std::uint64_t seed = 42;
  int cycle_start = 1;
  int max_gap = kDefaultMaxGapDays;
  std::string out;
  std::string report_format = "table";
};

struct TreeArgs {
  int min_leaf = 1;
  int min_split = 2;
  std::optional<int> max_depth;
  std::string criterion = "gini";
  int n_trees = 10;
  std::optional<int> feature_subsample;
  bool no_bootstrap = false;
};

struct WarnArgs {
  std::vector<int> stages = {2, 3};
  double threshold = 0.55;
  bool no_phase3_gate = false;
};

TrainParams make_params(const TreeArgs& t, std::uint64_t seed) {
  TrainParams p;
  p.min_leaf = t.min_leaf;
  p.min_split = t.min_split;
  p.max_depth = t.max_depth;
  const auto crit = split_criterion_from_name(t.criterion);
  if (!crit) throw InputError("unknown criterion '" + t.criterion + "'");
  p.criterion = *crit;
  p.n_trees = t.n_trees;
  p.feature_subsample = t.feature_subsample;
  p.bootstrap = !t.no_bootstrap;
  p.rng_seed = seed;
  return p;
}

FeatureSetSpec spec_for(const std::string& name) {
  const auto id = model_id_from_name(name);
  if (!id) throw InputError("unknown model '" + name + "' (expected m1, m2 or m3)");
  return FeatureSetSpec::standard(*id);
}

Date parse_date_arg(const std::string& text, const char* flag) {
  const auto d = parse_date(text);
  if (!d) throw InputError(std::string(flag) + " wants YYYY-MM-DD, got '" + text + "'");
  return *d;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out.flush()) throw InputError("failed writing " + path);
}

void print_load_summary(const LoadedInputs& in) {
  long repaired = 0;
  long unrepairable = 0;
  for (const GapReport& g : in.gaps) {
    for (const GapSpan& s : g.spans) {
      (s.status == RepairStatus::Interpolated ? repaired : unrepairable) += 1;
    }
  }
  long days = 0;
  for (const StationSeries& s : in.series) days += s.days();
  std::printf("input: %zu stations, %ld station-days, %zu parse notes, %ld readings demoted\n",
              in.series.size(), days, in.climate_diagnostics.size(), in.demoted_fields);
  std::printf("gaps: %ld repaired, %ld left missing\n", repaired, unrepairable);
}

int cmd_train(const CommonArgs& common, const TreeArgs& tree_args, const std::string& stamp) {
  if (common.out.empty()) throw InputError("--out is required: where to write the model");
  if (common.labels.empty()) throw InputError("--labels is required for training");
  const FeatureSetSpec spec = spec_for(common.model);
  const SeasonClock clock{common.cycle_start};
  const TrainParams params = make_params(tree_args, common.seed);

  const LoadedInputs inputs = load_inputs(common.climate, common.labels, common.max_gap);
  print_load_summary(inputs);
  long dropped_acc = 0;
  const Dataset ds = dataset_from(inputs, spec, clock, &dropped_acc);
  std::printf("dataset: %ld instances (%ld with nymph counts), %ld label days dropped, "
              "%ld days skipped in accumulation\n",
              long(ds.rows()), ds.regression_rows(), ds.dropped, dropped_acc);

  ModelBundle bundle;
  bundle.spec = spec;
  bundle.clock = clock;
  bundle.params = params;
  bundle.phase_tree = train_phase_tree(ds, params);
  bundle.ratios = train_ratio_predictor(ds, params);
  bundle.meta.dataset_digest = dataset_digest(ds);
  bundle.meta.n_instances = long(ds.rows());
  bundle.meta.n_regression = ds.regression_rows();
  bundle.meta.timestamp = stamp;
  save_bundle(bundle, common.out);

  std::size_t forest_nodes = 0;
  for (const ForestModel& f : bundle.ratios.forests) {
    for (const TreeModel& t : f.trees) forest_nodes += t.node_count();
  }
  std::printf("phase tree: %zu nodes (%zu leaves)\n", bundle.phase_tree.node_count(),
              bundle.phase_tree.leaf_count());
  std::printf("ratio forests: 5 stages x %d trees, %zu nodes total\n", params.n_trees,
              forest_nodes);
  std::printf("digest: %s\n", bundle.meta.dataset_digest.c_str());
  std::printf("wrote %s\n", common.out.c_str());
  return 0;
}

int cmd_evaluate(const CommonArgs& common, const TreeArgs& tree_args, int folds, double level,
                 const std::string& task) {
  if (common.labels.empty()) throw InputError("--labels is required for evaluation");
  if (task != "both" && task != "phase" && task != "ratios") {
    throw InputError("--task must be both, phase or ratios");
  }
  const FeatureSetSpec spec = spec_for(common.model);
  const SeasonClock clock{common.cycle_start};
  const TrainParams params = make_params(tree_args, common.seed);

  const LoadedInputs inputs = load_inputs(common.climate, common.labels, common.max_gap);
  const Dataset ds = dataset_from(inputs, spec, clock);

  std::optional<EvalReport> report;
  if (task != "ratios") {
    report = cross_validate_classifier(ds, params, folds, common.seed, level);
  }
  if (task != "phase") {
    EvalReport reg = cross_validate_regressor(ds, params, folds, common.seed, level);
    if (report) {
      report->regression = std::move(reg.regression);
    } else {
      report = std::move(reg);
    }
  }

  const std::string json_text = report_to_json(*report);
  if (common.report_format == "records") {
    std::fputs(json_text.c_str(), stdout);
  } else {
    std::fputs(render_report_table(*report).c_str(), stdout);
  }
  if (!common.out.empty()) {
    write_text_file(common.out, json_text);
    std::fprintf(stderr, "report written to %s\n", common.out.c_str());
  }
  return 0;
}

nlohmann::json forecast_record(const DailyForecast& day, const WarningRule& rule) {
  nlohmann::json j;
  j["station"] = day.station_id;
  j["date"] = format_date(day.date);
  j["phase"] = int(day.phase);
  j["phase_distribution"] = std::vector<double>(
      day.phase_distribution.data(), day.phase_distribution.data() + day.phase_distribution.size());
  j["ratios"] = std::vector<double>(day.ratios.r.data(), day.ratios.r.data() + 5);
  j["ratios_degenerate"] = day.ratios_degenerate;
  j["warning"] = warning_status_name(day.warning);
  j["rule"] = nlohmann::json{{"watched_stages", rule.watched_stages},
                             {"threshold", rule.threshold},
                             {"require_phase3", rule.require_phase3}};
  return j;
}

std::string forecast_records_text(const ForecastResult& result) {
  std::string out;
  for (const DailyForecast& day : result.days) {
    out += forecast_record(day, result.rule).dump();
    out += "\n";
  }
  return out;
}

std::string forecast_table_text(const ForecastResult& result) {
  std::string out =
      "station   date        phase  p1     p2     p3     s1     s2     s3     s4     s5     "
      "warning\n";
  char buf[256];
  for (const DailyForecast& day : result.days) {
    std::snprintf(buf, sizeof(buf),
                  "%-9s %s  %d      %.3f  %.3f  %.3f  %.3f  %.3f  %.3f  %.3f  %.3f  %s%s\n",
                  day.station_id.c_str(), format_date(day.date).c_str(), int(day.phase),
                  day.phase_distribution(0), day.phase_distribution(1), day.phase_distribution(2),
                  day.ratios.r[0], day.ratios.r[1], day.ratios.r[2], day.ratios.r[3],
                  day.ratios.r[4], warning_status_name(day.warning),
                  day.ratios_degenerate ? " (degenerate ratios)" : "");
    out += buf;
  }
  return out;
}

int cmd_predict(const CommonArgs& common, const std::string& bundle_path, const std::string& from,
                const std::string& to, const WarnArgs& warn) {
  if (bundle_path.empty()) throw InputError("--bundle is required for prediction");
  const ModelBundle bundle = load_bundle(bundle_path);
  const LoadedInputs inputs = load_inputs(common.climate, "", common.max_gap);

  WarningRule rule;
  rule.watched_stages = warn.stages;
  rule.threshold = warn.threshold;
  rule.require_phase3 = !warn.no_phase3_gate;

  const ForecastResult result = forecast_range(bundle, inputs.series, parse_date_arg(from, "--from"),
                                               parse_date_arg(to, "--to"), rule);
  for (const std::string& note : result.skipped) {
    std::fprintf(stderr, "skipped %s\n", note.c_str());
  }
  if (common.report_format == "records") {
    std::fputs(forecast_records_text(result).c_str(), stdout);
  } else {
    std::fputs(forecast_table_text(result).c_str(), stdout);
  }
  if (!common.out.empty()) {
    write_text_file(common.out, forecast_records_text(result));
    std::fprintf(stderr, "records written to %s\n", common.out.c_str());
  }
  return 0;
}

int cmd_export_dot(const std::string& bundle_path, const std::string& which,
                   const std::string& out_path) {
  if (bundle_path.empty()) throw InputError("--bundle is required");
  const ModelBundle bundle = load_bundle(bundle_path);
  std::string dot;
  if (which == "phase") {
    dot = tree_to_dot(bundle.phase_tree, "phase_tree");
  } else if (which.rfind("stage", 0) == 0 && which.size() == 6 && which[5] >= '1' &&
             which[5] <= '5') {
    const int stage = which[5] - '0';
    dot = forest_to_dot(bundle.ratios.forests[std::size_t(stage - 1)],
                        "stage" + std::to_string(stage) + "_forest");
  } else {
    throw InputError("--which must be phase or stage1..stage5");
  }
  if (out_path.empty()) {
    std::fputs(dot.c_str(), stdout);
  } else {
    write_text_file(out_path, dot);
    std::printf("wrote %s\n", out_path.c_str());
  }
  return 0;
}

int cmd_synth(const std::string& out_dir, const SynthConfig& cfg) {
  if (out_dir.empty()) throw InputError("--out-dir is required");
  std::filesystem::create_directories(out_dir);
  const SynthSeason season = generate_seasons(cfg);
  const auto dir = std::filesystem::path(out_dir);
  write_text_file((dir / "climate.csv").string(), season.climate_csv);
  write_text_file((dir / "labels.csv").string(), season.labels_csv);

  long counted = 0;
  for (const SynthTruthDay& d : season.truth.days) counted += d.ratios ? 1 : 0;
  std::printf("synthetic corpus: %d stations x %d years, %zu station-days, %ld counted days, "
              "%zu injected gap runs\n",
              cfg.stations, cfg.years, season.truth.days.size(), counted,
              season.truth.gaps.size());
  std::printf("wrote %s and %s\n", (dir / "climate.csv").string().c_str(),
              (dir / "labels.csv").string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sunn Pest life-cycle forecasting from daily climate data"};
  app.require_subcommand(1);

  CommonArgs common;
  TreeArgs tree_args;
  WarnArgs warn;
  std::string stamp;
  std::string bundle_path;
  std::string from_text;
  std::string to_text;
  std::string which = "phase";
  std::string out_dir;
  std::string task = "both";
  int folds = 10;
  double level = 0.99;
  SynthConfig synth_cfg;

  const auto add_common_inputs = [&](CLI::App* cmd, bool with_labels) {
    cmd->add_option("--climate", common.climate, "climate CSV file(s)")->required();
    if (with_labels) cmd->add_option("--labels", common.labels, "label CSV file");
    cmd->add_option("--cycle-start", common.cycle_start,
                    "day-of-year the accumulation resets on (default 1)");
    cmd->add_option("--max-gap", common.max_gap,
                    "longest sensor gap repaired by interpolation, days (default 14)");
  };
  const auto add_tree_options = [&](CLI::App* cmd) {
    cmd->add_option("--model", common.model, "feature set: m1, m2 or m3 (default m2)");
    cmd->add_option("--seed", common.seed, "RNG seed (default 42)");
    cmd->add_option("--min-leaf", tree_args.min_leaf, "smallest leaf size (default 1)");
    cmd->add_option("--min-split", tree_args.min_split, "smallest splittable node (default 2)");
    cmd->add_option("--max-depth", tree_args.max_depth, "depth cap (default unbounded)");
    cmd->add_option("--criterion", tree_args.criterion,
                    "phase-tree split criterion: gini or entropy (default gini)");
    cmd->add_option("--trees", tree_args.n_trees, "trees per ratio forest (default 10)");
    cmd->add_option("--feature-subsample", tree_args.feature_subsample,
                    "candidate features per forest split (default floor(log2(m))+1)");
    cmd->add_flag("--no-bootstrap", tree_args.no_bootstrap,
                  "train forest trees on the full sample instead of bootstraps");
  };

  CLI::App* train = app.add_subcommand("train", "fit the phase tree and ratio forests");
  add_common_inputs(train, true);
  add_tree_options(train);
  train->add_option("--out", common.out, "where to write the model bundle")->required();
  train->add_option("--stamp", stamp, "free-form label stored in the bundle metadata");

  CLI::App* evaluate = app.add_subcommand("evaluate", "cross-validate on labelled data");
  add_common_inputs(evaluate, true);
  add_tree_options(evaluate);
  evaluate->add_option("--folds", folds, "cross-validation folds (default 10)");
  evaluate->add_option("--level", level, "confidence level for the intervals (default 0.99)");
  evaluate->add_option("--task", task, "both, phase or ratios (default both)");
  evaluate->add_option("--out", common.out, "also write the JSON report here");
  evaluate->add_option("--report-format", common.report_format, "table or records");

  CLI::App* predict = app.add_subcommand("predict", "daily forecasts from a trained bundle");
  add_common_inputs(predict, false);
  predict->add_option("--bundle", bundle_path, "model bundle path")->required();
  predict->add_option("--from", from_text, "first date, YYYY-MM-DD")->required();
  predict->add_option("--to", to_text, "last date, YYYY-MM-DD")->required();
  predict->add_option("--out", common.out, "also write line-delimited records here");
  predict->add_option("--report-format", common.report_format, "table or records");
  predict->add_option("--warn-stages", warn.stages, "watched nymph stages (default 2,3)")
      ->delimiter(',');
  predict->add_option("--warn-threshold", warn.threshold,
                      "watched-mass threshold for the spray window (default 0.55)");
  predict->add_flag("--no-phase3-gate", warn.no_phase3_gate,
                    "allow the spray warning outside phase 3");

  CLI::App* export_dot = app.add_subcommand("export-dot", "write a model as Graphviz DOT");
  export_dot->add_option("--bundle", bundle_path, "model bundle path")->required();
  export_dot->add_option("--which", which, "phase or stage1..stage5 (default phase)");
  export_dot->add_option("--out", common.out, "output path (default standard output)");

  CLI::App* synth = app.add_subcommand("synth", "generate a labelled synthetic corpus");
  synth->add_option("--out-dir", out_dir, "directory for climate.csv and labels.csv")->required();
  synth->add_option("--years", synth_cfg.years, "years per station (default 4)");
  synth->add_option("--stations", synth_cfg.stations, "station count (default 2)");
  synth->add_option("--start-year", synth_cfg.start_year, "first calendar year (default 2015)");
  synth->add_option("--seed", synth_cfg.rng_seed, "generator seed (default 7)");
  synth->add_option("--missing-rate", synth_cfg.missing_rate,
                    "per-cell missing probability, 0..0.2 (default 0.02)");
  synth->add_option("--count-base", synth_cfg.count_base,
                    "insects counted per day before jitter (default 120)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (train->parsed()) return cmd_train(common, tree_args, stamp);
    if (evaluate->parsed()) return cmd_evaluate(common, tree_args, folds, level, task);
    if (predict->parsed()) return cmd_predict(common, bundle_path, from_text, to_text, warn);
    if (export_dot->parsed()) return cmd_export_dot(bundle_path, which, common.out);
    if (synth->parsed()) return cmd_synth(out_dir, synth_cfg);
    std::fprintf(stderr, "error: no command given\n");
    return 1;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
}
