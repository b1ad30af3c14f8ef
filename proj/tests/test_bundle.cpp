#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "doctest.h"
#include "sunncast/bundle.hpp"
#include "sunncast/dates.hpp"
#include "sunncast/errors.hpp"
#include "sunncast/rng.hpp"
#include "sunncast/tree.hpp"
#include "test_util.hpp"
#include "json.hpp"

using namespace sunncast;

namespace {

Dataset toy_dataset() {
  Dataset ds;
  ds.spec = FeatureSetSpec::standard(ModelId::M3AccumulatedReduced);
  const int n = 60;
  ds.features.resize(n, ds.spec.size());
  SplitMix64 rng(404);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < ds.spec.size(); ++j) {
      ds.features(i, j) = 1000.0 * rng.next_double();
    }
    const double key = ds.features(i, 0);
    ds.phases.push_back(key < 300.0   ? PhaseLabel::WinterQuarters
                        : key < 600.0 ? PhaseLabel::Migration
                                      : PhaseLabel::WheatField);
    if (ds.phases.back() == PhaseLabel::WheatField) {
      NymphStageRatios r;
      const double a = key / 1000.0;
      r.r << a, 1.0 - a, 0.0, 0.0, 0.0;
      ds.ratios.push_back(r);
    } else {
      ds.ratios.push_back(std::nullopt);
    }
    ds.station_ids.push_back("ST01");
    ds.dates.push_back(*parse_date("2016-01-01") + std::chrono::days{i});
  }
  return ds;
}

ModelBundle toy_bundle() {
  const Dataset ds = toy_dataset();
  TrainParams params;
  params.n_trees = 3;
  params.rng_seed = 12;
  ModelBundle b;
  b.spec = ds.spec;
  b.clock = SeasonClock{1};
  b.params = params;
  b.phase_tree = train_phase_tree(ds, params);
  b.ratios = train_ratio_predictor(ds, params);
  b.meta.dataset_digest = dataset_digest(ds);
  b.meta.n_instances = long(ds.rows());
  b.meta.n_regression = ds.regression_rows();
  return b;
}

}  // namespace

TEST_CASE("bundle JSON round-trips bit for bit") {
  const ModelBundle b = toy_bundle();
  const std::string text = bundle_to_json(b);
  const ModelBundle loaded = bundle_from_json(text);
  CHECK(bundle_to_json(loaded) == text);
  CHECK(loaded.spec == b.spec);
  CHECK(loaded.clock.cycle_start_doy == b.clock.cycle_start_doy);
  CHECK(loaded.meta.dataset_digest == b.meta.dataset_digest);
  CHECK(loaded.params.n_trees == 3);

  // Predictions are reproduced exactly on random probes.
  SplitMix64 rng(505);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd x(b.spec.size());
    for (int j = 0; j < b.spec.size(); ++j) x(j) = 1000.0 * rng.next_double();
    const PhasePrediction pa = predict_phase(b.phase_tree, x);
    const PhasePrediction pb = predict_phase(loaded.phase_tree, x);
    CHECK(pa.label == pb.label);
    CHECK(pa.distribution == pb.distribution);
    const RatioPrediction ra = predict_ratios(b.ratios, x);
    const RatioPrediction rb = predict_ratios(loaded.ratios, x);
    for (int s = 0; s < 5; ++s) CHECK(ra.ratios.r(s) == rb.ratios.r(s));
  }
}

TEST_CASE("save_bundle writes atomically and load_bundle reads back") {
  const auto dir = testutil::scratch_dir("bundle");
  const auto path = dir / "model.json";
  const ModelBundle b = toy_bundle();
  save_bundle(b, path);
  REQUIRE(std::filesystem::exists(path));
  CHECK(!std::filesystem::exists(dir / "model.json.tmp"));
  const ModelBundle loaded = load_bundle(path);
  CHECK(bundle_to_json(loaded) == bundle_to_json(b));

  CHECK_THROWS_AS(load_bundle(dir / "absent.json"), InputError);
  CHECK_THROWS_AS(save_bundle(b, dir / "no_such_dir" / "model.json"), InputError);
  CHECK(!std::filesystem::exists(dir / "no_such_dir"));
}

TEST_CASE("unknown format versions are refused") {
  const ModelBundle b = toy_bundle();
  nlohmann::json j = nlohmann::json::parse(bundle_to_json(b));
  j["format_version"] = 2;
  CHECK_THROWS_WITH_AS(bundle_from_json(j.dump()),
                       doctest::Contains("format_version"), InputError);
}

TEST_CASE("corrupt and truncated files fail with a position") {
  const ModelBundle b = toy_bundle();
  const std::string text = bundle_to_json(b);
  const std::string half = text.substr(0, text.size() / 2);
  CHECK_THROWS_WITH_AS(bundle_from_json(half), doctest::Contains("line"), InputError);

  // Structurally valid JSON with broken tree indices is rejected too.
  nlohmann::json j = nlohmann::json::parse(text);
  j["phase_tree"]["nodes"][0]["l"] = 0;
  CHECK_THROWS_AS(bundle_from_json(j.dump()), InputError);
  j = nlohmann::json::parse(text);
  j["ratio_forests"][2]["target_stage"] = 9;
  CHECK_THROWS_AS(bundle_from_json(j.dump()), InputError);
  j = nlohmann::json::parse(text);
  j["feature_set"]["fields"] = nlohmann::json::array();
  CHECK_THROWS_AS(bundle_from_json(j.dump()), InputError);
}

TEST_CASE("digest is deterministic and sensitive") {
  const Dataset ds = toy_dataset();
  const std::string d1 = dataset_digest(ds);
  const std::string d2 = dataset_digest(ds);
  CHECK(d1 == d2);
  CHECK(d1.rfind("fnv1a64:", 0) == 0);

  Dataset other = toy_dataset();
  other.features(0, 0) += 1.0;
  CHECK(dataset_digest(other) != d1);

  CHECK(fnv1a64("") == 14695981039346656037ULL);
  CHECK(fnv1a64("a") != fnv1a64("b"));
}

TEST_CASE("dot export mirrors the tree structure") {
  FeatureSetSpec spec = FeatureSetSpec::standard(ModelId::M3AccumulatedReduced);

  TreeModel leaf;
  leaf.kind = TreeKind::Classifier;
  leaf.spec = spec;
  leaf.n_classes = 3;
  leaf.nodes.resize(1);
  leaf.nodes[0].distribution = Eigen::Vector3d(1.0, 0.0, 0.0);
  const std::string leaf_dot = tree_to_dot(leaf, "phase_tree");
  CHECK(leaf_dot.rfind("digraph", 0) == 0);
  long nodes = 0;
  long edges = 0;
  for (std::size_t pos = 0; (pos = leaf_dot.find("label=", pos)) != std::string::npos; ++pos) ++nodes;
  for (std::size_t pos = 0; (pos = leaf_dot.find("->", pos)) != std::string::npos; ++pos) ++edges;
  CHECK(nodes == 1);
  CHECK(edges == 0);

  TreeModel stump;
  stump.kind = TreeKind::Classifier;
  stump.spec = spec;
  stump.n_classes = 3;
  stump.nodes.resize(3);
  stump.nodes[0] = TreeNode{2, 44533.125, 1, 2, {}, 0.0};
  stump.nodes[1].distribution = Eigen::Vector3d(1.0, 0.0, 0.0);
  stump.nodes[2].distribution = Eigen::Vector3d(0.0, 0.0, 1.0);
  const std::string dot = tree_to_dot(stump, "phase_tree");
  nodes = edges = 0;
  // Internal node labels name the feature and the 6-significant-digit cut.
  CHECK(dot.find(spec.fields[2] + " ≤ 44533.1") != std::string::npos);
  CHECK(dot.find("yes") != std::string::npos);
  CHECK(dot.find("no") != std::string::npos);
  std::size_t arrow = 0;
  for (std::size_t pos = 0; (pos = dot.find("->", pos)) != std::string::npos; ++pos) ++arrow;
  CHECK(arrow == 2);

  // A trained bundle's DOT has one graph node per tree node.
  const ModelBundle b = toy_bundle();
  const std::string tree_dot = tree_to_dot(b.phase_tree, "phase_tree");
  std::size_t labels = 0;
  for (std::size_t pos = 0; (pos = tree_dot.find("label=", pos)) != std::string::npos; ++pos) {
    ++labels;
  }
  // label= appears once per node plus once per edge (yes/no).
  const std::size_t internal = b.phase_tree.node_count() - b.phase_tree.leaf_count();
  CHECK(labels == b.phase_tree.node_count() + 2 * internal);

  const std::string forest_dot = forest_to_dot(b.ratios.forests[0], "stage1_forest");
  CHECK(forest_dot.find("cluster_t0") != std::string::npos);
  CHECK(forest_dot.find("cluster_t2") != std::string::npos);

  // Every internal node of the exported graph has exactly two outgoing edges.
  std::size_t internal_total = 0;
  std::size_t edge_total = 0;
  for (const TreeModel& t : b.ratios.forests[0].trees) {
    internal_total += t.node_count() - t.leaf_count();
  }
  for (std::size_t pos = 0; (pos = forest_dot.find("->", pos)) != std::string::npos; ++pos) {
    ++edge_total;
  }
  CHECK(edge_total == 2 * internal_total);
}
