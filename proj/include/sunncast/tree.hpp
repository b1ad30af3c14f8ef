#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sunncast/errors.hpp"
#include "sunncast/features.hpp"

namespace sunncast {

enum class SplitCriterion { Gini, Entropy, Mae };

const char* split_criterion_name(SplitCriterion c);
std::optional<SplitCriterion> split_criterion_from_name(std::string_view name);

/// Training knobs. The defaults are the tool defaults the experiments used:
/// min_leaf 1, min_split 2, unlimited depth, Gini splits for the phase
/// classifier, MAE splits and 10 trees for the ratio forests.
struct TrainParams {
  int min_leaf = 1;
  int min_split = 2;
  std::optional<int> max_depth;  // absent = unbounded
  SplitCriterion criterion = SplitCriterion::Gini;

  // Forest-only knobs.
  int n_trees = 10;
  std::optional<int> feature_subsample;  // candidates per split; absent = floor(log2(m)) + 1
  bool bootstrap = true;

  std::uint64_t rng_seed = 0;

  void validate(int n_features) const;
  int resolved_feature_subsample(int n_features) const;
};

enum class TreeKind { Classifier, Regressor };

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  Eigen::VectorXd distribution;  // classifier leaves: class probabilities, sum 1
  double value = 0.0;            // regressor leaves

  bool is_leaf() const { return feature < 0; }
};

/// One trained binary-split tree. x goes left iff x[feature] <= threshold.
struct TreeModel {
  TreeKind kind = TreeKind::Classifier;
  FeatureSetSpec spec;
  int n_classes = 0;  // classifiers only
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  std::size_t node_count() const { return nodes.size(); }
  std::size_t leaf_count() const;
  const TreeNode& leaf_for(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

/// Bagged regression trees for one nymphal stage.
struct ForestModel {
  std::vector<TreeModel> trees;
  int target_stage = 1;  // 1..5
  FeatureSetSpec spec;
  TrainParams params;
};

/// Five independent forests, one per nymphal stage, sharing a feature spec.
struct RatioPredictor {
  std::array<ForestModel, 5> forests;

  const FeatureSetSpec& spec() const { return forests[0].spec; }
};

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double score = 0.0;  // size-weighted child criterion
};

/// Gini impurity 1 - sum((c_i/total)^2) of a class-count vector.
/// Throws on an empty node (total 0) or a negative count.
double gini_impurity(const Eigen::Ref<const Eigen::VectorXd>& class_counts);

/// Shannon entropy in bits, same contract as gini_impurity.
double entropy_impurity(const Eigen::Ref<const Eigen::VectorXd>& class_counts);

/// Mean absolute deviation from the median (midpoint convention for even
/// counts). The median is the MAE-optimal centre; leaves still predict the
/// mean. Throws on an empty set.
double mae_criterion(std::span<const double> values);

/// Best threshold split over the given rows and candidate features:
/// thresholds are midpoints between consecutive distinct sorted values,
/// both children must keep at least min_leaf rows, and the winner minimises
/// the size-weighted child criterion. Scores within 1e-12 are treated as
/// ties and broken by lowest feature index, then lowest threshold. Absent
/// when no candidate feature admits a legal split.
std::optional<SplitCandidate> best_split_classification(
    const Eigen::Ref<const Eigen::MatrixXd>& X, std::span<const int> y, int n_classes,
    std::span<const int> rows, std::span<const int> features, SplitCriterion criterion,
    int min_leaf);

std::optional<SplitCandidate> best_split_regression(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                                    const Eigen::Ref<const Eigen::VectorXd>& y,
                                                    std::span<const int> rows,
                                                    std::span<const int> features, int min_leaf);

/// Greedy CART growth on all features, no randomness. Labels are 0-based
/// class indices. Row order never matters: rows are canonicalised before
/// growth and every per-node statistic is order-insensitive.
TreeModel train_classifier(const Eigen::Ref<const Eigen::MatrixXd>& X, std::span<const int> y,
                           int n_classes, const FeatureSetSpec& spec, const TrainParams& params);

TreeModel train_regressor(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureSetSpec& spec,
                          const TrainParams& params);

/// Bagged regression forest: each tree trains on a seeded bootstrap
/// resample of size n (when bootstrap is on) and draws feature_subsample
/// candidate features per split from a stream keyed to (seed, tree,
/// node path), so results do not depend on scheduling or row order.
ForestModel train_forest(const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureSetSpec& spec,
                         const TrainParams& params, int target_stage = 1);

struct PhasePrediction {
  PhaseLabel label = PhaseLabel::WinterQuarters;
  Eigen::VectorXd distribution;  // over phases 1..3
};

/// Routes x to a leaf; the label is the argmax of the leaf distribution,
/// ties to the lowest-numbered phase. Throws on arity mismatch.
PhasePrediction predict_phase(const TreeModel& tree, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Regression tree / forest point predictions.
double predict_value(const TreeModel& tree, const Eigen::Ref<const Eigen::VectorXd>& x);
double predict_forest(const ForestModel& forest, const Eigen::Ref<const Eigen::VectorXd>& x);

struct RatioPrediction {
  NymphStageRatios ratios;
  Eigen::Array<double, 5, 1> raw = Eigen::Array<double, 5, 1>::Zero();  // per-forest means
  bool degenerate = false;  // all raw outputs clamped to zero
};

/// Per-stage forest means, clamped to [0,1] and renormalised to sum 1.
/// If everything clamps to zero the result falls back to stage 1 with the
/// degenerate flag set.
RatioPrediction predict_ratios(const RatioPredictor& p, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Trains the phase classifier from a dataset (Gini/Entropy criterion).
TreeModel train_phase_tree(const Dataset& ds, const TrainParams& params);

/// Trains the five per-stage ratio forests from the rows that carry ratio
/// labels. The split criterion is always MAE for the forests. Throws
/// InputError when no row has ratios.
RatioPredictor train_ratio_predictor(const Dataset& ds, const TrainParams& params);

}  // namespace sunncast
