#include "sunncast/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sunncast/rng.hpp"

namespace sunncast {

namespace {

// Candidate scores closer than this (relative) count as ties; the earlier
// candidate in scan order wins. Must match the tie rule of any external
// reference implementation run against best_split_*.
constexpr double kScoreTol = 1e-12;

constexpr std::uint64_t kBootstrapSalt = 0x243f6a8885a308d3ULL;
constexpr std::uint64_t kNodeSalt = 0x13198a2e03707344ULL;
constexpr std::uint64_t kFeatureSalt = 0xa4093822299f31d0ULL;

bool score_improves(double score, double best) {
  return score < best - kScoreTol * std::max(1.0, std::abs(best));
}

// Mean absolute deviation from the median (midpoint convention); reorders buf.
double mad_in_place(std::vector<double>& buf) {
  const std::size_t n = buf.size();
  const auto mid = buf.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(buf.begin(), mid, buf.end());
  double median = *mid;
  if (n % 2 == 0) median = 0.5 * (*std::max_element(buf.begin(), mid) + median);
  double sum = 0.0;
  for (double v : buf) sum += std::abs(v - median);
  return sum / static_cast<double>(n);
}

template <typename Derived>
double impurity_of_counts(const Eigen::DenseBase<Derived>& counts, double total,
                          SplitCriterion criterion) {
  if (criterion == SplitCriterion::Gini) {
    double sq = 0.0;
    for (Eigen::Index i = 0; i < counts.size(); ++i) {
      const double p = counts(i) / total;
      sq += p * p;
    }
    return 1.0 - sq;
  }
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts(i) > 0.0) {
      const double p = counts(i) / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

void check_counts(const Eigen::Ref<const Eigen::VectorXd>& counts) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts(i) < 0.0) throw InputError("class counts must be non-negative");
    total += counts(i);
  }
  if (total <= 0.0) throw InputError("impurity of an empty node is undefined");
}

std::vector<int> pick_features(int n_features, int k, std::uint64_t node_seed) {
  std::vector<int> pool(static_cast<std::size_t>(n_features));
  std::iota(pool.begin(), pool.end(), 0);
  SplitMix64 rng(mix64(node_seed, kFeatureSalt));
  for (int i = 0; i < k; ++i) {
    const auto j =
        i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_features - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(k));
  std::sort(pool.begin(), pool.end());
  return pool;
}

// Canonical row order: lexicographic by feature columns, then target. Makes
// every train_* result independent of input row permutation.
template <typename TargetLess>
std::vector<int> canonical_rows(const Eigen::Ref<const Eigen::MatrixXd>& X, TargetLess tless) {
  std::vector<int> idx(static_cast<std::size_t>(X.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  const Eigen::Index m = X.cols();
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    for (Eigen::Index c = 0; c < m; ++c) {
      if (X(a, c) != X(b, c)) return X(a, c) < X(b, c);
    }
    return tless(a, b);
  });
  return idx;
}

struct GrowTask {
  int node = 0;
  std::vector<int> rows;
  int depth = 0;
  std::uint64_t seed = 0;
};

// Splits rows into the two children, preserving relative order.
void partition_rows(const Eigen::Ref<const Eigen::MatrixXd>& X, const std::vector<int>& rows,
                    const SplitCandidate& split, std::vector<int>& left,
                    std::vector<int>& right) {
  left.clear();
  right.clear();
  for (int r : rows) {
    if (X(r, split.feature) <= split.threshold) {
      left.push_back(r);
    } else {
      right.push_back(r);
    }
  }
}

TreeModel grow_classifier_tree(const Eigen::Ref<const Eigen::MatrixXd>& X, std::span<const int> y,
                               int n_classes, const FeatureSetSpec& spec,
                               const TrainParams& params, std::vector<int> root_rows) {
  TreeModel tree;
  tree.kind = TreeKind::Classifier;
  tree.spec = spec;
  tree.n_classes = n_classes;

  std::vector<int> features(static_cast<std::size_t>(X.cols()));
  std::iota(features.begin(), features.end(), 0);

  std::vector<GrowTask> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::move(root_rows), 0, 0});

  Eigen::VectorXd counts(n_classes);
  while (!stack.empty()) {
    GrowTask task = std::move(stack.back());
    stack.pop_back();
    const auto size = static_cast<int>(task.rows.size());

    counts.setZero();
    for (int r : task.rows) counts(y[static_cast<std::size_t>(r)]) += 1.0;
    const bool pure = counts.maxCoeff() == static_cast<double>(size);
    const bool depth_stop = params.max_depth && task.depth >= *params.max_depth;

    std::optional<SplitCandidate> split;
    if (!pure && !depth_stop && size >= params.min_split) {
      split = best_split_classification(X, y, n_classes, task.rows, features, params.criterion,
                                        params.min_leaf);
    }
    if (!split) {
      tree.nodes[static_cast<std::size_t>(task.node)].distribution =
          counts / static_cast<double>(size);
      continue;
    }

    std::vector<int> lrows;
    std::vector<int> rrows;
    partition_rows(X, task.rows, *split, lrows, rrows);
    const auto li = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto ri = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(task.node)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = li;
    node.right = ri;
    stack.push_back({ri, std::move(rrows), task.depth + 1, 0});
    stack.push_back({li, std::move(lrows), task.depth + 1, 0});
  }
  return tree;
}

TreeModel grow_regression_tree(const Eigen::Ref<const Eigen::MatrixXd>& X,
                               const Eigen::Ref<const Eigen::VectorXd>& y,
                               const FeatureSetSpec& spec, const TrainParams& params,
                               std::vector<int> root_rows, int subsample_k, std::uint64_t root_seed,
                               bool use_subsample) {
  TreeModel tree;
  tree.kind = TreeKind::Regressor;
  tree.spec = spec;

  const auto m = static_cast<int>(X.cols());
  std::vector<int> all_features(static_cast<std::size_t>(m));
  std::iota(all_features.begin(), all_features.end(), 0);

  std::vector<GrowTask> stack;
  tree.nodes.emplace_back();
  stack.push_back({0, std::move(root_rows), 0, root_seed});

  while (!stack.empty()) {
    GrowTask task = std::move(stack.back());
    stack.pop_back();
    const auto size = static_cast<int>(task.rows.size());

    double sum = 0.0;
    double lo = y(task.rows.front());
    double hi = lo;
    for (int r : task.rows) {
      const double v = y(r);
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const bool pure = lo == hi;
    const bool depth_stop = params.max_depth && task.depth >= *params.max_depth;

    std::optional<SplitCandidate> split;
    if (!pure && !depth_stop && size >= params.min_split) {
      if (use_subsample) {
        const std::vector<int> features = pick_features(m, subsample_k, task.seed);
        split = best_split_regression(X, y, task.rows, features, params.min_leaf);
      } else {
        split = best_split_regression(X, y, task.rows, all_features, params.min_leaf);
      }
    }
    if (!split) {
      tree.nodes[static_cast<std::size_t>(task.node)].value = sum / static_cast<double>(size);
      continue;
    }

    std::vector<int> lrows;
    std::vector<int> rrows;
    partition_rows(X, task.rows, *split, lrows, rrows);
    const auto li = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto ri = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(task.node)];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = li;
    node.right = ri;
    stack.push_back({ri, std::move(rrows), task.depth + 1, mix64(task.seed, 2)});
    stack.push_back({li, std::move(lrows), task.depth + 1, mix64(task.seed, 1)});
  }
  return tree;
}

const TreeNode& walk_to_leaf(const TreeModel& tree, const Eigen::Ref<const Eigen::VectorXd>& x) {
  const TreeNode* node = &tree.nodes.front();
  while (!node->is_leaf()) {
    node = x(node->feature) <= node->threshold ? &tree.nodes[static_cast<std::size_t>(node->left)]
                                               : &tree.nodes[static_cast<std::size_t>(node->right)];
  }
  return *node;
}

void check_arity(const FeatureSetSpec& spec, Eigen::Index got) {
  if (got != static_cast<Eigen::Index>(spec.size())) {
    throw InputError("feature vector has " + std::to_string(got) +
                     " values but the model expects " + std::to_string(spec.size()) + " (" +
                     model_id_name(spec.id) + ")");
  }
}

void check_training_inputs(const Eigen::Ref<const Eigen::MatrixXd>& X, Eigen::Index n_targets) {
  if (X.rows() < 1) throw InputError("training set is empty");
  if (X.rows() != n_targets) {
    throw InputError("feature matrix has " + std::to_string(X.rows()) + " rows but " +
                     std::to_string(n_targets) + " targets were given");
  }
}

}  // namespace

const char* split_criterion_name(SplitCriterion c) {
  switch (c) {
    case SplitCriterion::Gini: return "gini";
    case SplitCriterion::Entropy: return "entropy";
    case SplitCriterion::Mae: return "mae";
  }
  return "gini";
}

std::optional<SplitCriterion> split_criterion_from_name(std::string_view name) {
  if (name == "gini") return SplitCriterion::Gini;
  if (name == "entropy") return SplitCriterion::Entropy;
  if (name == "mae") return SplitCriterion::Mae;
  return std::nullopt;
}

void TrainParams::validate(int n_features) const {
  if (n_features < 1) throw InputError("training requires at least one feature");
  if (min_leaf < 1) throw InputError("min_leaf must be at least 1");
  if (min_split < 2) throw InputError("min_split must be at least 2");
  if (max_depth && *max_depth < 0) throw InputError("max_depth must be non-negative");
  if (n_trees < 1) throw InputError("n_trees must be at least 1");
  if (feature_subsample && (*feature_subsample < 1 || *feature_subsample > n_features)) {
    throw InputError("feature_subsample must be between 1 and " + std::to_string(n_features));
  }
}

int TrainParams::resolved_feature_subsample(int n_features) const {
  if (feature_subsample) return std::min(*feature_subsample, n_features);
  int k = 0;
  while ((1 << (k + 1)) <= n_features) ++k;  // k = floor(log2(n_features))
  return k + 1;
}

std::size_t TreeModel::leaf_count() const {
  std::size_t n = 0;
  for (const TreeNode& node : nodes) {
    if (node.is_leaf()) ++n;
  }
  return n;
}

const TreeNode& TreeModel::leaf_for(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (nodes.empty()) throw InputError("model has no nodes");
  check_arity(spec, x.size());
  return walk_to_leaf(*this, x);
}

double gini_impurity(const Eigen::Ref<const Eigen::VectorXd>& class_counts) {
  check_counts(class_counts);
  return impurity_of_counts(class_counts, class_counts.sum(), SplitCriterion::Gini);
}

double entropy_impurity(const Eigen::Ref<const Eigen::VectorXd>& class_counts) {
  check_counts(class_counts);
  return impurity_of_counts(class_counts, class_counts.sum(), SplitCriterion::Entropy);
}

double mae_criterion(std::span<const double> values) {
  if (values.empty()) throw InputError("MAE criterion of an empty set is undefined");
  std::vector<double> buf(values.begin(), values.end());
  return mad_in_place(buf);
}

std::optional<SplitCandidate> best_split_classification(
    const Eigen::Ref<const Eigen::MatrixXd>& X, std::span<const int> y, int n_classes,
    std::span<const int> rows, std::span<const int> features, SplitCriterion criterion,
    int min_leaf) {
  if (criterion == SplitCriterion::Mae) {
    throw InputError("MAE is not a classification criterion");
  }
  const auto s = static_cast<int>(rows.size());
  std::optional<SplitCandidate> best;
  if (s < 2) return best;

  std::vector<std::pair<double, int>> vals(static_cast<std::size_t>(s));
  Eigen::VectorXd total(n_classes);
  Eigen::VectorXd left(n_classes);
  Eigen::VectorXd right(n_classes);
  for (int f : features) {
    total.setZero();
    for (int i = 0; i < s; ++i) {
      const int r = rows[static_cast<std::size_t>(i)];
      vals[static_cast<std::size_t>(i)] = {X(r, f), y[static_cast<std::size_t>(r)]};
      total(y[static_cast<std::size_t>(r)]) += 1.0;
    }
    std::sort(vals.begin(), vals.end());
    left.setZero();
    for (int i = 0; i + 1 < s; ++i) {
      left(vals[static_cast<std::size_t>(i)].second) += 1.0;
      const double a = vals[static_cast<std::size_t>(i)].first;
      const double b = vals[static_cast<std::size_t>(i + 1)].first;
      if (!(a < b)) continue;
      const int nl = i + 1;
      const int nr = s - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      right = total - left;
      const double score = (nl * impurity_of_counts(left, nl, criterion) +
                            nr * impurity_of_counts(right, nr, criterion)) /
                           static_cast<double>(s);
      if (!best || score_improves(score, best->score)) {
        best = SplitCandidate{f, 0.5 * (a + b), score};
      }
    }
  }
  return best;
}

std::optional<SplitCandidate> best_split_regression(const Eigen::Ref<const Eigen::MatrixXd>& X,
                                                    const Eigen::Ref<const Eigen::VectorXd>& y,
                                                    std::span<const int> rows,
                                                    std::span<const int> features, int min_leaf) {
  const auto s = static_cast<int>(rows.size());
  std::optional<SplitCandidate> best;
  if (s < 2) return best;

  std::vector<std::pair<double, double>> vals(static_cast<std::size_t>(s));
  std::vector<double> lbuf;
  std::vector<double> rbuf;
  lbuf.reserve(static_cast<std::size_t>(s));
  rbuf.reserve(static_cast<std::size_t>(s));
  for (int f : features) {
    for (int i = 0; i < s; ++i) {
      const int r = rows[static_cast<std::size_t>(i)];
      vals[static_cast<std::size_t>(i)] = {X(r, f), y(r)};
    }
    std::sort(vals.begin(), vals.end());
    for (int i = 0; i + 1 < s; ++i) {
      const double a = vals[static_cast<std::size_t>(i)].first;
      const double b = vals[static_cast<std::size_t>(i + 1)].first;
      if (!(a < b)) continue;
      const int nl = i + 1;
      const int nr = s - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      lbuf.clear();
      rbuf.clear();
      for (int j = 0; j < nl; ++j) lbuf.push_back(vals[static_cast<std::size_t>(j)].second);
      for (int j = nl; j < s; ++j) rbuf.push_back(vals[static_cast<std::size_t>(j)].second);
      const double score =
          (nl * mad_in_place(lbuf) + nr * mad_in_place(rbuf)) / static_cast<double>(s);
      if (!best || score_improves(score, best->score)) {
        best = SplitCandidate{f, 0.5 * (a + b), score};
      }
    }
  }
  return best;
}

TreeModel train_classifier(const Eigen::Ref<const Eigen::MatrixXd>& X, std::span<const int> y,
                           int n_classes, const FeatureSetSpec& spec, const TrainParams& params) {
  check_training_inputs(X, static_cast<Eigen::Index>(y.size()));
  params.validate(static_cast<int>(X.cols()));
  if (params.criterion == SplitCriterion::Mae) {
    throw InputError("classification trees need the gini or entropy criterion");
  }
  if (n_classes < 2) throw InputError("classification needs at least two classes");
  for (int label : y) {
    if (label < 0 || label >= n_classes) {
      throw InputError("class label " + std::to_string(label) + " is outside [0, " +
                       std::to_string(n_classes) + ")");
    }
  }
  std::vector<int> rows =
      canonical_rows(X, [&](int a, int b) { return y[static_cast<std::size_t>(a)] < y[static_cast<std::size_t>(b)]; });
  return grow_classifier_tree(X, y, n_classes, spec, params, std::move(rows));
}

TreeModel train_regressor(const Eigen::Ref<const Eigen::MatrixXd>& X,
                          const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureSetSpec& spec,
                          const TrainParams& params) {
  check_training_inputs(X, y.size());
  params.validate(static_cast<int>(X.cols()));
  std::vector<int> rows = canonical_rows(X, [&](int a, int b) { return y(a) < y(b); });
  return grow_regression_tree(X, y, spec, params, std::move(rows), static_cast<int>(X.cols()),
                              /*root_seed=*/0, /*use_subsample=*/false);
}

ForestModel train_forest(const Eigen::Ref<const Eigen::MatrixXd>& X,
                         const Eigen::Ref<const Eigen::VectorXd>& y, const FeatureSetSpec& spec,
                         const TrainParams& params, int target_stage) {
  check_training_inputs(X, y.size());
  const auto m = static_cast<int>(X.cols());
  params.validate(m);
  const auto n = static_cast<int>(X.rows());
  const int k = params.resolved_feature_subsample(m);
  const std::vector<int> canon =
      canonical_rows(X, [&](int a, int b) { return y(a) < y(b); });

  ForestModel forest;
  forest.target_stage = target_stage;
  forest.spec = spec;
  forest.params = params;
  forest.trees.reserve(static_cast<std::size_t>(params.n_trees));
  for (int t = 0; t < params.n_trees; ++t) {
    const std::uint64_t tree_key = mix64(params.rng_seed, static_cast<std::uint64_t>(t) + 1);
    std::vector<int> rows;
    if (params.bootstrap) {
      SplitMix64 boot(mix64(tree_key, kBootstrapSalt));
      rows.resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        rows[static_cast<std::size_t>(i)] =
            canon[static_cast<std::size_t>(boot.next_below(static_cast<std::uint64_t>(n)))];
      }
    } else {
      rows = canon;
    }
    forest.trees.push_back(grow_regression_tree(X, y, spec, params, std::move(rows), k,
                                                mix64(tree_key, kNodeSalt),
                                                /*use_subsample=*/k < m));
  }
  return forest;
}

PhasePrediction predict_phase(const TreeModel& tree, const Eigen::Ref<const Eigen::VectorXd>& x) {
  // Binary concept trees still map onto the phase domain (labels 1..2).
  if (tree.kind != TreeKind::Classifier || tree.n_classes < 2 || tree.n_classes > kPhaseCount) {
    throw InputError("model is not a phase classifier");
  }
  const TreeNode& leaf = tree.leaf_for(x);
  PhasePrediction out;
  out.distribution = leaf.distribution;
  Eigen::Index arg = 0;
  for (Eigen::Index i = 1; i < leaf.distribution.size(); ++i) {
    if (leaf.distribution(i) > leaf.distribution(arg)) arg = i;
  }
  out.label = *phase_from_int(static_cast<int>(arg) + 1);
  return out;
}

double predict_value(const TreeModel& tree, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (tree.kind != TreeKind::Regressor) throw InputError("model is not a regression tree");
  return tree.leaf_for(x).value;
}

double predict_forest(const ForestModel& forest, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (forest.trees.empty()) throw InputError("forest has no trees");
  check_arity(forest.spec, x.size());
  double sum = 0.0;
  for (const TreeModel& tree : forest.trees) sum += walk_to_leaf(tree, x).value;
  return sum / static_cast<double>(forest.trees.size());
}

RatioPrediction predict_ratios(const RatioPredictor& p,
                               const Eigen::Ref<const Eigen::VectorXd>& x) {
  RatioPrediction out;
  double sum = 0.0;
  Eigen::Array<double, 5, 1> clamped;
  for (int s = 0; s < 5; ++s) {
    out.raw(s) = predict_forest(p.forests[static_cast<std::size_t>(s)], x);
    clamped(s) = std::clamp(out.raw(s), 0.0, 1.0);
    sum += clamped(s);
  }
  if (sum <= 0.0) {
    out.degenerate = true;
    out.ratios.r.setZero();
    out.ratios.r(0) = 1.0;
    return out;
  }
  out.ratios.r = clamped / sum;
  return out;
}

TreeModel train_phase_tree(const Dataset& ds, const TrainParams& params) {
  if (ds.features.rows() < 1) throw InputError("dataset has no rows");
  std::vector<int> y(ds.phases.size());
  for (std::size_t i = 0; i < ds.phases.size(); ++i) {
    y[i] = static_cast<int>(ds.phases[i]) - 1;
  }
  return train_classifier(ds.features, y, kPhaseCount, ds.spec, params);
}

RatioPredictor train_ratio_predictor(const Dataset& ds, const TrainParams& params) {
  std::vector<int> rows;
  for (std::size_t i = 0; i < ds.ratios.size(); ++i) {
    if (ds.ratios[i]) rows.push_back(static_cast<int>(i));
  }
  if (rows.empty()) {
    throw InputError("no regression instances: at least one label row must carry nymph counts");
  }
  const auto nr = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd Xr(nr, ds.features.cols());
  for (Eigen::Index i = 0; i < nr; ++i) {
    Xr.row(i) = ds.features.row(rows[static_cast<std::size_t>(i)]);
  }

  RatioPredictor predictor;
  Eigen::VectorXd y(nr);
  for (int s = 0; s < 5; ++s) {
    for (Eigen::Index i = 0; i < nr; ++i) {
      y(i) = ds.ratios[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])]->r(s);
    }
    TrainParams stage_params = params;
    stage_params.criterion = SplitCriterion::Mae;
    stage_params.rng_seed = mix64(params.rng_seed, 101 + static_cast<std::uint64_t>(s));
    predictor.forests[static_cast<std::size_t>(s)] =
        train_forest(Xr, y, ds.spec, stage_params, s + 1);
  }
  return predictor;
}

}  // namespace sunncast
