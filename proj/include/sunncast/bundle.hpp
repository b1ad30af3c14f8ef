#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "sunncast/features.hpp"
#include "sunncast/tree.hpp"

namespace sunncast {

struct TrainingMeta {
  std::string dataset_digest;  // fnv1a64 over the canonical dataset text
  long n_instances = 0;
  long n_regression = 0;
  std::string timestamp;  // operator label; empty by default so identical
                          // trainings produce identical files
};

/// Everything cmd_predict needs: the phase classifier, the five ratio
/// forests, the feature spec they share, and the season clock the features
/// were accumulated under.
struct ModelBundle {
  FeatureSetSpec spec;
  SeasonClock clock;
  TreeModel phase_tree;
  RatioPredictor ratios;
  TrainParams params;
  TrainingMeta meta;
};

inline constexpr int kBundleFormatVersion = 1;

std::uint64_t fnv1a64(std::string_view bytes);

/// Canonical digest of what the models were trained on.
std::string dataset_digest(const Dataset& ds);

/// Serialization (JSON syntax). Doubles are written in shortest
/// round-trip form, so save/load reproduces predictions bit for bit.
std::string bundle_to_json(const ModelBundle& bundle);
ModelBundle bundle_from_json(std::string_view text);

/// Atomic save: temp file in the target directory, then rename.
void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path);
ModelBundle load_bundle(const std::filesystem::path& path);

/// Graphviz exports for agronomist review. Internal nodes are labelled
/// "name ≤ threshold" with 6-significant-digit thresholds; leaves carry the
/// class distribution or the predicted value. One DOT node per tree node.
std::string tree_to_dot(const TreeModel& tree, const std::string& graph_name);
std::string forest_to_dot(const ForestModel& forest, const std::string& graph_name);

}  // namespace sunncast
