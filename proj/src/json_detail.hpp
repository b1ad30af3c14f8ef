#pragma once

#include <optional>

#include "json.hpp"
#include "sunncast/errors.hpp"
#include "sunncast/features.hpp"
#include "sunncast/stats.hpp"
#include "sunncast/tree.hpp"

// JSON helpers shared by the report writer and the bundle store. Not part
// of the public headers; keys here are the on-disk contract.
namespace sunncast::detail {

using nlohmann::json;

inline json interval_to_json(const Interval& iv) {
  return json{{"confidence_level", iv.confidence_level},
              {"lower", iv.lower},
              {"method", iv.method == IntervalMethod::ProportionZ ? "proportion_z" : "mean_t"},
              {"upper", iv.upper}};
}

inline json params_to_json(const TrainParams& p) {
  json j{{"bootstrap", p.bootstrap},
         {"criterion", split_criterion_name(p.criterion)},
         {"min_leaf", p.min_leaf},
         {"min_split", p.min_split},
         {"n_trees", p.n_trees},
         {"rng_seed", p.rng_seed}};
  j["max_depth"] = p.max_depth ? json(*p.max_depth) : json(nullptr);
  j["feature_subsample"] = p.feature_subsample ? json(*p.feature_subsample) : json(nullptr);
  return j;
}

inline TrainParams params_from_json(const json& j) {
  TrainParams p;
  p.min_leaf = j.at("min_leaf").get<int>();
  p.min_split = j.at("min_split").get<int>();
  if (!j.at("max_depth").is_null()) p.max_depth = j.at("max_depth").get<int>();
  const auto crit = split_criterion_from_name(j.at("criterion").get<std::string>());
  if (!crit) throw InputError("unknown split criterion in model file");
  p.criterion = *crit;
  p.n_trees = j.at("n_trees").get<int>();
  if (!j.at("feature_subsample").is_null()) {
    p.feature_subsample = j.at("feature_subsample").get<int>();
  }
  p.bootstrap = j.at("bootstrap").get<bool>();
  p.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  return p;
}

inline json spec_to_json(const FeatureSetSpec& s) {
  return json{{"fields", s.fields}, {"id", model_id_name(s.id)}};
}

inline FeatureSetSpec spec_from_json(const json& j) {
  FeatureSetSpec s;
  const auto id = model_id_from_name(j.at("id").get<std::string>());
  if (!id) throw InputError("unknown feature set id in model file");
  s.id = *id;
  s.fields = j.at("fields").get<std::vector<std::string>>();
  if (s.fields.empty()) throw InputError("feature set in model file has no fields");
  return s;
}

}  // namespace sunncast::detail
