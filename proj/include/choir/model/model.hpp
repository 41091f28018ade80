#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "choir/ad/tensor.hpp"
#include "choir/encoders/encoders.hpp"
#include "choir/geometry/types.hpp"
#include "choir/model/blocks.hpp"
#include "choir/model/config.hpp"
#include "choir/nn/layers.hpp"

namespace choir::inline CHOIR_PRECISION_NS::model {

// One clip as seen by the model.
struct ModelInput {
  Tensor grid;    // (T*H1*W1) x D observation channels, frame-major
  Tensor motion;  // T x 12 relative head motion
  geometry::Points cloud;  // N points, centered and unit-scaled
};

struct ModelOutputs {
  Tensor phi_a;  // N x 1 affordance probabilities, input point order
  Tensor phi_c;  // T x V contact probabilities
  Tensor phi_s;  // 1 x classes logits
};

// Intermediate features of one forward pass. Point-indexed tensors here are
// in canonical (sorted) point order; `point_order[r]` is the input index of
// canonical row r.
struct ForwardTrace {
  std::vector<std::size_t> point_order;
  Tensor F_V, F_M, F_O;
  Tensor F_a, F_sf;  // affordance block output (before synergy)
  Tensor F_c, F_si;  // contact block output
  Tensor F_a_refined;
  ParallelCrossAttention::Trace theta_a, theta_c;
};

// Sorted lexicographic order of the points with index as the final key.
std::vector<std::size_t> canonical_point_order(std::span<const geometry::Vec3> cloud);

// Fixed sinusoidal table, T x C.
Tensor temporal_encoding(std::size_t T, std::size_t C);

class ChoirModel {
 public:
  ChoirModel(const ModelConfig& config, std::uint64_t seed);

  ChoirModel(const ChoirModel&) = delete;
  ChoirModel& operator=(const ChoirModel&) = delete;

  // `dropout_rng` enables dropout when non-null and the config allows it.
  ModelOutputs forward(const ModelInput& input, ForwardTrace* trace = nullptr,
                       nn::Rng* dropout_rng = nullptr) const;

  // Decoders on canonical-order features. F_sf and F_si may be undefined
  // when the semantic head is disabled.
  ModelOutputs decode(const Tensor& F_a_refined, const Tensor& F_c, const Tensor& F_sf, const Tensor& F_si) const;

  const ModelConfig& config() const { return config_; }
  nn::ParameterSet& parameters() { return params_; }
  const nn::ParameterSet& parameters() const { return params_; }

  // Parameters the optimizer updates; excludes frozen modulation tokens
  // under disable_tau and unused semantic tokens.
  std::vector<Tensor> trainable() const;

  const enc::AppearanceEncoder& appearance() const { return appearance_; }
  const enc::MotionEncoder& motion() const { return motion_; }
  const enc::PointEncoder& points() const { return points_; }
  const ParallelCrossAttention& theta_a() const { return theta_a_; }
  const ParallelCrossAttention& theta_c() const { return theta_c_; }
  const nn::MultiHeadAttention& synergy() const { return synergy_; }

  const Tensor& tau_v() const { return tau_v_; }
  const Tensor& tau_m() const { return tau_m_; }
  const Tensor& tau_o() const { return tau_o_; }
  const Tensor& token_f() const { return token_f_; }
  const Tensor& token_i() const { return token_i_; }

 private:
  ModelConfig config_;
  nn::ParameterSet params_;
  enc::AppearanceEncoder appearance_;
  enc::MotionEncoder motion_;
  enc::PointEncoder points_;
  Tensor tau_v_, tau_m_, tau_o_;
  Tensor token_f_, token_i_;
  ParallelCrossAttention theta_a_, theta_c_;
  nn::MultiHeadAttention synergy_;
  nn::Mlp semantic_head_;
  nn::Mlp affordance_head_;
  nn::Linear contact_feature_;
  nn::Linear contact_spatial_;
  Tensor pe_t_;
  std::vector<std::size_t> frame_index_;
};

}  // namespace choir::inline CHOIR_PRECISION_NS::model
