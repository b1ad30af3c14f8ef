#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sunncast/features.hpp"
#include "sunncast/stats.hpp"
#include "sunncast/tree.hpp"

namespace sunncast {

/// Pooled counts over all out-of-fold predictions; rows are actual classes,
/// columns predicted, in labels order.
struct ConfusionMatrix {
  std::vector<int> labels;
  Eigen::MatrixXi counts;

  long total() const { return counts.sum(); }
  long trace() const { return counts.diagonal().sum(); }
  double accuracy() const;  // trace/total; throws when empty
};

/// Fold index (0..k-1) per instance. With strata given, each class is
/// shuffled and dealt round-robin so fold sizes differ by at most 1 both
/// overall and within every class. Deterministic in (n, k, seed, strata).
std::vector<int> kfold_assign(long n, int k, std::uint64_t seed,
                              std::span<const int> strata = {});

/// Pooled out-of-fold (predicted, actual) pairs for one nymphal stage,
/// in dataset row order. r is absent when either side is constant.
struct StageScatter {
  int stage = 1;  // 1..5
  std::vector<double> predicted;
  std::vector<double> actual;
  std::optional<double> r;
};

struct ClassificationEval {
  ConfusionMatrix confusion;
  double accuracy = 0.0;
  Interval error_interval;  // proportion interval on 1 - accuracy
  long n = 0;
};

struct RegressionEval {
  std::array<StageScatter, 5> stages;
  double mae = 0.0;         // pooled mean |predicted - actual| over all stages
  Interval error_interval;  // t interval on per-instance mean absolute error
  long n = 0;               // instances carrying ratio labels
  bool has_undefined_r = false;
};

struct EvalReport {
  ModelId model = ModelId::M2Accumulated;
  int folds = 0;
  std::uint64_t fold_seed = 0;
  double confidence_level = 0.99;
  TrainParams params;
  std::optional<ClassificationEval> classification;
  std::optional<RegressionEval> regression;
};

/// Stratified k-fold CV of the phase classifier: one tree per fold trained
/// on the remaining folds, predictions pooled into a single confusion matrix.
EvalReport cross_validate_classifier(const Dataset& ds, const TrainParams& params, int k,
                                     std::uint64_t seed, double level = 0.99);

/// Plain k-fold CV of the five-stage ratio predictor over the rows that
/// carry ratio labels; pooled per-stage scatter and Pearson r.
EvalReport cross_validate_regressor(const Dataset& ds, const TrainParams& params, int k,
                                    std::uint64_t seed, double level = 0.99);

/// Human-readable rendering for standard output.
std::string render_report_table(const EvalReport& report);

/// Machine-readable rendering (JSON syntax), scatter pairs included.
std::string report_to_json(const EvalReport& report);

}  // namespace sunncast
