#include "sunncast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "json_detail.hpp"
#include "sunncast/rng.hpp"

namespace sunncast {

namespace {

constexpr std::uint64_t kFoldSalt = 0x082efa98ec4e6c89ULL;

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[256];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof(buf), format, args);
  va_end(args);
  return buf;
}

Dataset subset_rows(const Dataset& ds, const std::vector<int>& rows) {
  Dataset out;
  out.spec = ds.spec;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), ds.features.cols());
  out.phases.reserve(rows.size());
  out.ratios.reserve(rows.size());
  out.station_ids.reserve(rows.size());
  out.dates.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<std::size_t>(rows[i]);
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(rows[i]);
    out.phases.push_back(ds.phases[r]);
    out.ratios.push_back(ds.ratios[r]);
    out.station_ids.push_back(ds.station_ids[r]);
    out.dates.push_back(ds.dates[r]);
  }
  return out;
}

std::string interval_text(const Interval& iv) {
  return fmt("[%.6f, %.6f]", iv.lower, iv.upper);
}

}  // namespace

double ConfusionMatrix::accuracy() const {
  const long n = total();
  if (n <= 0) throw InputError("confusion matrix is empty");
  return static_cast<double>(trace()) / static_cast<double>(n);
}

std::vector<int> kfold_assign(long n, int k, std::uint64_t seed, std::span<const int> strata) {
  if (k < 2) throw InputError("fold count must be at least 2");
  if (n < k) {
    throw InputError("n < k: " + std::to_string(n) + " instances cannot fill " +
                     std::to_string(k) + " folds");
  }
  if (!strata.empty() && static_cast<long>(strata.size()) != n) {
    throw InputError("strata labels must match the instance count");
  }

  std::vector<int> fold(static_cast<std::size_t>(n), -1);
  SplitMix64 rng(mix64(seed, kFoldSalt));
  long counter = 0;
  if (strata.empty()) {
    std::vector<long> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0L);
    deterministic_shuffle(std::span<long>(order), rng);
    for (long idx : order) {
      fold[static_cast<std::size_t>(idx)] = static_cast<int>(counter++ % k);
    }
    return fold;
  }

  // Classes in ascending label order, one running counter across all of
  // them: fold sizes then differ by <= 1 overall and within each class.
  std::map<int, std::vector<long>> members;
  for (long i = 0; i < n; ++i) {
    members[strata[static_cast<std::size_t>(i)]].push_back(i);
  }
  for (auto& [label, idxs] : members) {
    deterministic_shuffle(std::span<long>(idxs), rng);
    for (long idx : idxs) {
      fold[static_cast<std::size_t>(idx)] = static_cast<int>(counter++ % k);
    }
  }
  return fold;
}

EvalReport cross_validate_classifier(const Dataset& ds, const TrainParams& params, int k,
                                     std::uint64_t seed, double level) {
  const long n = ds.rows();
  std::vector<int> strata(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    strata[static_cast<std::size_t>(i)] = static_cast<int>(ds.phases[static_cast<std::size_t>(i)]);
  }
  const std::vector<int> fold = kfold_assign(n, k, seed, strata);

  ConfusionMatrix cm;
  cm.labels = {1, 2, 3};
  cm.counts = Eigen::MatrixXi::Zero(kPhaseCount, kPhaseCount);
  for (int f = 0; f < k; ++f) {
    std::vector<int> train_rows;
    std::vector<int> test_rows;
    for (long i = 0; i < n; ++i) {
      (fold[static_cast<std::size_t>(i)] == f ? test_rows : train_rows)
          .push_back(static_cast<int>(i));
    }
    const Dataset tr = subset_rows(ds, train_rows);
    const TreeModel tree = train_phase_tree(tr, params);
    for (int r : test_rows) {
      const PhasePrediction pred = predict_phase(tree, ds.features.row(r).transpose());
      cm.counts(static_cast<int>(ds.phases[static_cast<std::size_t>(r)]) - 1,
                static_cast<int>(pred.label) - 1) += 1;
    }
  }

  EvalReport report;
  report.model = ds.spec.id;
  report.folds = k;
  report.fold_seed = seed;
  report.confidence_level = level;
  report.params = params;
  ClassificationEval ce;
  ce.confusion = cm;
  ce.accuracy = cm.accuracy();
  ce.error_interval = ci_proportion(1.0 - ce.accuracy, n, level);
  ce.n = n;
  report.classification = std::move(ce);
  return report;
}

EvalReport cross_validate_regressor(const Dataset& ds, const TrainParams& params, int k,
                                    std::uint64_t seed, double level) {
  std::vector<int> ratio_rows;
  for (std::size_t i = 0; i < ds.ratios.size(); ++i) {
    if (ds.ratios[i]) ratio_rows.push_back(static_cast<int>(i));
  }
  const auto nr = static_cast<long>(ratio_rows.size());
  if (nr == 0) throw InputError("no regression instances: no label row carries nymph counts");
  const std::vector<int> fold = kfold_assign(nr, k, seed);

  std::vector<RatioPredictor> models;
  models.reserve(static_cast<std::size_t>(k));
  for (int f = 0; f < k; ++f) {
    std::vector<int> train_rows;
    for (long i = 0; i < nr; ++i) {
      if (fold[static_cast<std::size_t>(i)] != f) {
        train_rows.push_back(ratio_rows[static_cast<std::size_t>(i)]);
      }
    }
    models.push_back(train_ratio_predictor(subset_rows(ds, train_rows), params));
  }

  RegressionEval re;
  re.n = nr;
  for (int s = 0; s < 5; ++s) {
    re.stages[static_cast<std::size_t>(s)].stage = s + 1;
    re.stages[static_cast<std::size_t>(s)].predicted.reserve(static_cast<std::size_t>(nr));
    re.stages[static_cast<std::size_t>(s)].actual.reserve(static_cast<std::size_t>(nr));
  }
  Eigen::ArrayXd instance_err(nr);
  double abs_sum = 0.0;
  for (long i = 0; i < nr; ++i) {
    const int r = ratio_rows[static_cast<std::size_t>(i)];
    const auto f = static_cast<std::size_t>(fold[static_cast<std::size_t>(i)]);
    const RatioPrediction pred = predict_ratios(models[f], ds.features.row(r).transpose());
    const Eigen::Array<double, 5, 1>& actual = ds.ratios[static_cast<std::size_t>(r)]->r;
    double err = 0.0;
    for (int s = 0; s < 5; ++s) {
      const double p = pred.ratios.r(s);
      const double a = actual(s);
      re.stages[static_cast<std::size_t>(s)].predicted.push_back(p);
      re.stages[static_cast<std::size_t>(s)].actual.push_back(a);
      err += std::abs(p - a);
    }
    abs_sum += err;
    instance_err(i) = err / 5.0;
  }
  re.mae = abs_sum / static_cast<double>(nr * 5);
  re.error_interval = ci_mean(instance_err, level);
  for (auto& stage : re.stages) {
    stage.r = pearson_r(
        Eigen::Map<const Eigen::VectorXd>(stage.predicted.data(),
                                          static_cast<Eigen::Index>(stage.predicted.size())),
        Eigen::Map<const Eigen::VectorXd>(stage.actual.data(),
                                          static_cast<Eigen::Index>(stage.actual.size())));
    if (!stage.r) re.has_undefined_r = true;
  }

  EvalReport report;
  report.model = ds.spec.id;
  report.folds = k;
  report.fold_seed = seed;
  report.confidence_level = level;
  report.params = params;
  report.regression = std::move(re);
  return report;
}

std::string render_report_table(const EvalReport& report) {
  std::string out;
  out += fmt("model %s | folds %d | fold seed %llu | level %.2f\n", model_id_name(report.model),
             report.folds, static_cast<unsigned long long>(report.fold_seed),
             report.confidence_level);
  if (report.classification) {
    const ClassificationEval& ce = *report.classification;
    out += fmt("phase classifier: n %ld, accuracy %.6f, error %.6f, ci %s\n", ce.n, ce.accuracy,
               1.0 - ce.accuracy, interval_text(ce.error_interval).c_str());
    out += "confusion (rows actual, cols predicted):\n";
    out += "          ";
    for (int label : ce.confusion.labels) out += fmt("%8s", fmt("p%d", label).c_str());
    out += "\n";
    for (Eigen::Index i = 0; i < ce.confusion.counts.rows(); ++i) {
      out += fmt("  a%-7d", ce.confusion.labels[static_cast<std::size_t>(i)]);
      for (Eigen::Index j = 0; j < ce.confusion.counts.cols(); ++j) {
        out += fmt("%8d", ce.confusion.counts(i, j));
      }
      out += "\n";
    }
  }
  if (report.regression) {
    const RegressionEval& re = *report.regression;
    out += fmt("ratio forests: n %ld, mae %.6f, ci %s\n", re.n, re.mae,
               interval_text(re.error_interval).c_str());
    for (const StageScatter& stage : re.stages) {
      if (stage.r) {
        out += fmt("  stage %d r %.6f\n", stage.stage, *stage.r);
      } else {
        out += fmt("  stage %d r undefined (constant values)\n", stage.stage);
      }
    }
  }
  return out;
}

std::string report_to_json(const EvalReport& report) {
  using detail::json;
  json j;
  j["model"] = model_id_name(report.model);
  j["folds"] = report.folds;
  j["fold_seed"] = report.fold_seed;
  j["confidence_level"] = report.confidence_level;
  j["train_params"] = detail::params_to_json(report.params);
  if (report.classification) {
    const ClassificationEval& ce = *report.classification;
    json counts = json::array();
    for (Eigen::Index i = 0; i < ce.confusion.counts.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index c = 0; c < ce.confusion.counts.cols(); ++c) {
        row.push_back(ce.confusion.counts(i, c));
      }
      counts.push_back(std::move(row));
    }
    j["classification"] = json{{"accuracy", ce.accuracy},
                               {"confusion", json{{"labels", ce.confusion.labels},
                                                  {"counts", std::move(counts)}}},
                               {"error_interval", detail::interval_to_json(ce.error_interval)},
                               {"n", ce.n}};
  }
  if (report.regression) {
    const RegressionEval& re = *report.regression;
    json stages = json::array();
    for (const StageScatter& stage : re.stages) {
      json s{{"stage", stage.stage},
             {"predicted", stage.predicted},
             {"actual", stage.actual}};
      s["r"] = stage.r ? json(*stage.r) : json(nullptr);
      stages.push_back(std::move(s));
    }
    j["regression"] = json{{"error_interval", detail::interval_to_json(re.error_interval)},
                           {"has_undefined_r", re.has_undefined_r},
                           {"mae", re.mae},
                           {"n", re.n},
                           {"stages", std::move(stages)}};
  }
  return j.dump(2) + "\n";
}

}  // namespace sunncast
