#include "choir/model/config.hpp"

#include <set>

#include "choir/error.hpp"

namespace choir::inline CHOIR_PRECISION_NS::model {

using nlohmann::json;

void ModelConfig::validate() const {
  EncoderConfig::validate();
  if (V == 0) throw UsageError("model config: V must be positive");
  if (classes < 2) throw UsageError("model config: need at least two classes");
  if (dropout < 0.0 || dropout >= 1.0) throw UsageError("model config: dropout must lie in [0, 1)");
}

json to_json(const enc::EncoderConfig& c) {
  return json{{"T", c.T},         {"H1", c.H1},       {"W1", c.W1},
              {"D", c.D},         {"C", c.C},         {"N", c.N},
              {"heads", c.heads}, {"st_depth", c.st_depth}, {"knn_k", c.knn_k}};
}

json to_json(const Ablation& a) {
  return json{{"disable_motion", a.disable_motion},
              {"disable_affordance_branch", a.disable_affordance_branch},
              {"disable_tau", a.disable_tau},
              {"disable_pe_t", a.disable_pe_t},
              {"disable_synergy", a.disable_synergy},
              {"disable_semantic_head", a.disable_semantic_head},
              {"online_motion_pretrain", a.online_motion_pretrain}};
}

json to_json(const ModelConfig& c) {
  json j = to_json(static_cast<const enc::EncoderConfig&>(c));
  j["V"] = c.V;
  j["classes"] = c.classes;
  j["dropout"] = c.dropout;
  j["dropout_enabled"] = c.dropout_enabled;
  j["continuous_affordance_target"] = c.continuous_affordance_target;
  j["ablation"] = to_json(c.ablation);
  return j;
}

namespace {

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* where) {
  for (const auto& [k, _] : j.items()) {
    if (!known.count(k)) throw DataError(std::string(where) + ": unknown key '" + k + "'");
  }
}

}  // namespace

ModelConfig model_config_from_json(const json& j) {
  if (!j.is_object()) throw DataError("model config: expected a JSON object");
  reject_unknown(j,
                 {"T", "H1", "W1", "D", "C", "N", "heads", "st_depth", "knn_k", "V", "classes", "dropout",
                  "dropout_enabled", "continuous_affordance_target", "ablation"},
                 "model config");
  ModelConfig c;
  read(j, "T", c.T);
  read(j, "H1", c.H1);
  read(j, "W1", c.W1);
  read(j, "D", c.D);
  read(j, "C", c.C);
  read(j, "N", c.N);
  read(j, "heads", c.heads);
  read(j, "st_depth", c.st_depth);
  read(j, "knn_k", c.knn_k);
  read(j, "V", c.V);
  read(j, "classes", c.classes);
  read(j, "dropout", c.dropout);
  read(j, "dropout_enabled", c.dropout_enabled);
  read(j, "continuous_affordance_target", c.continuous_affordance_target);
  if (j.contains("ablation")) {
    const json& a = j.at("ablation");
    if (!a.is_object()) throw DataError("model config: 'ablation' must be an object");
    reject_unknown(a,
                   {"disable_motion", "disable_affordance_branch", "disable_tau", "disable_pe_t",
                    "disable_synergy", "disable_semantic_head", "online_motion_pretrain"},
                   "ablation");
    read(a, "disable_motion", c.ablation.disable_motion);
    read(a, "disable_affordance_branch", c.ablation.disable_affordance_branch);
    read(a, "disable_tau", c.ablation.disable_tau);
    read(a, "disable_pe_t", c.ablation.disable_pe_t);
    read(a, "disable_synergy", c.ablation.disable_synergy);
    read(a, "disable_semantic_head", c.ablation.disable_semantic_head);
    read(a, "online_motion_pretrain", c.ablation.online_motion_pretrain);
  }
  c.validate();
  return c;
}

}  // namespace choir::inline CHOIR_PRECISION_NS::model
