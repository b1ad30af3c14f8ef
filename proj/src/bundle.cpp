#include "sunncast/bundle.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json_detail.hpp"
#include "sunncast/dates.hpp"

namespace sunncast {

namespace {

using detail::json;

std::string num_text(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

json tree_nodes_to_json(const TreeModel& tree) {
  json nodes = json::array();
  for (const TreeNode& node : tree.nodes) {
    if (node.is_leaf()) {
      if (tree.kind == TreeKind::Classifier) {
        std::vector<double> p(node.distribution.data(),
                              node.distribution.data() + node.distribution.size());
        nodes.push_back(json{{"p", std::move(p)}});
      } else {
        nodes.push_back(json{{"v", node.value}});
      }
    } else {
      nodes.push_back(json{{"f", node.feature},
                           {"t", node.threshold},
                           {"l", node.left},
                           {"r", node.right}});
    }
  }
  return nodes;
}

TreeModel tree_from_json(const json& nodes, TreeKind kind, int n_classes,
                         const FeatureSetSpec& spec) {
  if (!nodes.is_array() || nodes.empty()) {
    throw InputError("model file damaged: tree without nodes");
  }
  TreeModel tree;
  tree.kind = kind;
  tree.spec = spec;
  tree.n_classes = kind == TreeKind::Classifier ? n_classes : 0;
  const auto size = static_cast<int>(nodes.size());
  tree.nodes.reserve(nodes.size());
  for (int i = 0; i < size; ++i) {
    const json& jn = nodes[static_cast<std::size_t>(i)];
    TreeNode node;
    if (jn.contains("f")) {
      node.feature = jn.at("f").get<int>();
      node.threshold = jn.at("t").get<double>();
      node.left = jn.at("l").get<int>();
      node.right = jn.at("r").get<int>();
      if (node.feature < 0 || node.feature >= spec.size()) {
        throw InputError("model file damaged: split feature out of range");
      }
      // Children always follow their parent, so index order proves the
      // node array is a tree and walks terminate.
      if (node.left <= i || node.right <= i || node.left >= size || node.right >= size) {
        throw InputError("model file damaged: child index out of order");
      }
    } else if (kind == TreeKind::Classifier) {
      const auto p = jn.at("p").get<std::vector<double>>();
      if (static_cast<int>(p.size()) != n_classes) {
        throw InputError("model file damaged: leaf distribution arity");
      }
      node.distribution = Eigen::Map<const Eigen::VectorXd>(p.data(),
                                                            static_cast<Eigen::Index>(p.size()));
    } else {
      node.value = jn.at("v").get<double>();
    }
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string dataset_digest(const Dataset& ds) {
  std::string text;
  text += model_id_name(ds.spec.id);
  for (const std::string& f : ds.spec.fields) {
    text += ',';
    text += f;
  }
  text += '\n';
  for (Eigen::Index i = 0; i < ds.rows(); ++i) {
    const auto r = static_cast<std::size_t>(i);
    text += ds.station_ids[r];
    text += '|';
    text += format_date(ds.dates[r]);
    text += '|';
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) {
      if (c > 0) text += ',';
      text += num_text(ds.features(i, c));
    }
    text += '|';
    text += std::to_string(static_cast<int>(ds.phases[r]));
    if (ds.ratios[r]) {
      text += '|';
      for (int s = 0; s < 5; ++s) {
        if (s > 0) text += ',';
        text += num_text(ds.ratios[r]->r[s]);
      }
    }
    text += '\n';
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                static_cast<unsigned long long>(fnv1a64(text)));
  return buf;
}

std::string bundle_to_json(const ModelBundle& bundle) {
  if (bundle.phase_tree.spec != bundle.spec) {
    throw InputError("bundle models disagree on the feature set");
  }
  json forests = json::array();
  for (const ForestModel& forest : bundle.ratios.forests) {
    if (forest.spec != bundle.spec) {
      throw InputError("bundle models disagree on the feature set");
    }
    json trees = json::array();
    for (const TreeModel& tree : forest.trees) {
      trees.push_back(json{{"nodes", tree_nodes_to_json(tree)}});
    }
    forests.push_back(json{{"target_stage", forest.target_stage}, {"trees", std::move(trees)}});
  }

  json j;
  j["format_version"] = kBundleFormatVersion;
  j["feature_set"] = detail::spec_to_json(bundle.spec);
  j["phase_tree"] = json{{"n_classes", kPhaseCount},
                         {"nodes", tree_nodes_to_json(bundle.phase_tree)}};
  j["ratio_forests"] = std::move(forests);
  j["train_params"] = detail::params_to_json(bundle.params);
  j["rng_seed"] = bundle.params.rng_seed;
  j["training_metadata"] = json{{"cycle_start_doy", bundle.clock.cycle_start_doy},
                                {"dataset_digest", bundle.meta.dataset_digest},
                                {"n_instances", bundle.meta.n_instances},
                                {"n_regression", bundle.meta.n_regression},
                                {"timestamp", bundle.meta.timestamp}};
  return j.dump() + "\n";
}

ModelBundle bundle_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("model file is not valid JSON: ") + e.what());
  }
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kBundleFormatVersion) {
      throw InputError("model file has format_version " + std::to_string(version) +
                       "; this build reads version " + std::to_string(kBundleFormatVersion));
    }
    ModelBundle bundle;
    bundle.spec = detail::spec_from_json(j.at("feature_set"));
    bundle.params = detail::params_from_json(j.at("train_params"));
    if (j.at("rng_seed").get<std::uint64_t>() != bundle.params.rng_seed) {
      throw InputError("model file damaged: rng_seed disagrees with train_params");
    }
    const json& meta = j.at("training_metadata");
    bundle.clock.cycle_start_doy = meta.at("cycle_start_doy").get<int>();
    bundle.clock.validate();
    bundle.meta.dataset_digest = meta.at("dataset_digest").get<std::string>();
    bundle.meta.n_instances = meta.at("n_instances").get<long>();
    bundle.meta.n_regression = meta.at("n_regression").get<long>();
    bundle.meta.timestamp = meta.at("timestamp").get<std::string>();

    const json& pt = j.at("phase_tree");
    if (pt.at("n_classes").get<int>() != kPhaseCount) {
      throw InputError("model file damaged: phase tree class count");
    }
    bundle.phase_tree =
        tree_from_json(pt.at("nodes"), TreeKind::Classifier, kPhaseCount, bundle.spec);

    const json& forests = j.at("ratio_forests");
    if (!forests.is_array() || forests.size() != 5) {
      throw InputError("model file damaged: expected 5 ratio forests");
    }
    for (int s = 0; s < 5; ++s) {
      const json& jf = forests[static_cast<std::size_t>(s)];
      ForestModel& forest = bundle.ratios.forests[static_cast<std::size_t>(s)];
      forest.target_stage = jf.at("target_stage").get<int>();
      if (forest.target_stage != s + 1) {
        throw InputError("model file damaged: ratio forests out of stage order");
      }
      forest.spec = bundle.spec;
      forest.params = bundle.params;
      forest.params.criterion = SplitCriterion::Mae;
      const json& trees = jf.at("trees");
      if (!trees.is_array() || trees.empty()) {
        throw InputError("model file damaged: forest without trees");
      }
      for (const json& jt : trees) {
        forest.trees.push_back(
            tree_from_json(jt.at("nodes"), TreeKind::Regressor, 0, bundle.spec));
      }
    }
    return bundle;
  } catch (const json::exception& e) {
    throw InputError(std::string("model file damaged: ") + e.what());
  }
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& path) {
  const std::string text = bundle_to_json(bundle);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out.flush()) throw InputError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw InputError("cannot move model file into place at " + path.string());
  }
}

ModelBundle load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return bundle_from_json(buf.str());
}

namespace {

void append_tree_dot(std::string& out, const TreeModel& tree, const std::string& prefix,
                     const char* indent) {
  char buf[160];
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& node = tree.nodes[i];
    if (!node.is_leaf()) {
      const std::string& name = tree.spec.fields[static_cast<std::size_t>(node.feature)];
      std::snprintf(buf, sizeof(buf), "%s%s%zu [label=\"%s ≤ %.6g\"];\n", indent,
                    prefix.c_str(), i, name.c_str(), node.threshold);
      out += buf;
    } else if (tree.kind == TreeKind::Classifier) {
      std::string dist;
      for (Eigen::Index c = 0; c < node.distribution.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%s%.3f", c > 0 ? ", " : "", node.distribution(c));
        dist += buf;
      }
      std::snprintf(buf, sizeof(buf), "%s%s%zu [shape=box, label=\"[%s]\"];\n", indent,
                    prefix.c_str(), i, dist.c_str());
      out += buf;
    } else {
      std::snprintf(buf, sizeof(buf), "%s%s%zu [shape=box, label=\"%.6g\"];\n", indent,
                    prefix.c_str(), i, node.value);
      out += buf;
    }
  }
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const TreeNode& node = tree.nodes[i];
    if (node.is_leaf()) continue;
    std::snprintf(buf, sizeof(buf), "%s%s%zu -> %s%d [label=\"yes\"];\n", indent, prefix.c_str(),
                  i, prefix.c_str(), node.left);
    out += buf;
    std::snprintf(buf, sizeof(buf), "%s%s%zu -> %s%d [label=\"no\"];\n", indent, prefix.c_str(),
                  i, prefix.c_str(), node.right);
    out += buf;
  }
}

}  // namespace

std::string tree_to_dot(const TreeModel& tree, const std::string& graph_name) {
  std::string out = "digraph " + graph_name + " {\n";
  append_tree_dot(out, tree, "n", "  ");
  out += "}\n";
  return out;
}

std::string forest_to_dot(const ForestModel& forest, const std::string& graph_name) {
  std::string out = "digraph " + graph_name + " {\n";
  char buf[96];
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    std::snprintf(buf, sizeof(buf), "  subgraph cluster_t%zu {\n    label=\"tree %zu\";\n", t, t);
    out += buf;
    std::snprintf(buf, sizeof(buf), "t%zu_n", t);
    append_tree_dot(out, forest.trees[t], buf, "    ");
    out += "  }\n";
  }
  out += "}\n";
  return out;
}

}  // namespace sunncast
