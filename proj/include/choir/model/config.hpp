#pragma once

#include <cstddef>
#include <string>

#include "choir/encoders/config.hpp"
#include "json.hpp"

namespace choir::inline CHOIR_PRECISION_NS::model {

inline constexpr std::size_t kNumClasses = 12;

// Each flag removes one ingredient of the full model.
struct Ablation {
  bool disable_motion = false;             // motion features replaced by zeros
  bool disable_affordance_branch = false;  // contact block ignores affordance features
  bool disable_tau = false;                // modulation tokens frozen at one
  bool disable_pe_t = false;               // no temporal position encoding
  bool disable_synergy = false;            // no affordance refinement from contact
  bool disable_semantic_head = false;      // semantic branch and class loss removed
  bool online_motion_pretrain = false;     // alignment loss joins the main objective

  bool operator==(const Ablation&) const = default;
};

struct ModelConfig : enc::EncoderConfig {
  std::size_t V = 512;  // template mesh vertices
  std::size_t classes = kNumClasses;
  double dropout = 0.1;
  bool dropout_enabled = false;
  // Dice/focal targets use the continuous affordance instead of the 0.5
  // threshold.
  bool continuous_affordance_target = false;
  Ablation ablation;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const enc::EncoderConfig& c);
nlohmann::json to_json(const Ablation& a);
nlohmann::json to_json(const ModelConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace choir::inline CHOIR_PRECISION_NS::model
