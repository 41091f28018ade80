#pragma once

#include <span>
#include <string>

#include "choir/ad/tensor.hpp"
#include "choir/encoders/config.hpp"
#include "choir/geometry/types.hpp"
#include "choir/nn/layers.hpp"

namespace choir::inline CHOIR_PRECISION_NS::enc {

using ad::Tensor;

// Parameter name prefixes, used to select a module's parameters.
inline constexpr const char* kAppearancePrefix = "appearance.";
inline constexpr const char* kMotionPrefix = "motion.";
inline constexpr const char* kPointPrefix = "points.";

// Patch embedding followed by joint space-time self-attention over all
// T*H1*W1 tokens. Input grids are (T*H1*W1) x D, frame-major.
class AppearanceEncoder {
 public:
  AppearanceEncoder() = default;
  AppearanceEncoder(nn::ParameterSet& params, const EncoderConfig& config, nn::Rng& rng);

  // Per-patch embedding only: (T*H1*W1) x C.
  Tensor embed(const Tensor& grid) const;
  // Full encoder output F_V: (T*H1*W1) x C.
  Tensor operator()(const Tensor& grid) const;

 private:
  struct Block {
    nn::LayerNorm norm1, norm2;
    nn::MultiHeadAttention attention;
    nn::Mlp ffn;
  };
  EncoderConfig config_;
  nn::Linear patch_;
  Tensor spatial_pos_;   // (H1*W1) x C
  Tensor temporal_pos_;  // T x C
  std::vector<Block> blocks_;
  nn::LayerNorm final_norm_;
  std::vector<std::size_t> spatial_index_, temporal_index_;
};

// Frame-pointwise MLP 12 -> C -> C -> C on relative head motion (T x 12).
class MotionEncoder {
 public:
  MotionEncoder() = default;
  MotionEncoder(nn::ParameterSet& params, const EncoderConfig& config, nn::Rng& rng);

  Tensor operator()(const Tensor& motion) const;

 private:
  std::size_t width_ = 0;
  nn::Mlp mlp_;
};

// Single edge-convolution block: edge MLP on (x_i, x_j - x_i) over the k
// nearest neighbors, max over neighbors, concatenation with the global max
// and a fusion MLP to C. Input must already be centered and scaled.
class PointEncoder {
 public:
  PointEncoder() = default;
  PointEncoder(nn::ParameterSet& params, const EncoderConfig& config, nn::Rng& rng);

  Tensor operator()(std::span<const geometry::Vec3> cloud) const;

 private:
  EncoderConfig config_;
  nn::Mlp edge_;
  nn::Mlp fusion_;
};

// Edge features (x_i, x_j - x_i) for the k nearest neighbors of every point:
// (N*k) x 6, grouped by source point.
Tensor edge_features(std::span<const geometry::Vec3> cloud, std::size_t k);

// sum(p * log(eps + p / (eps + q))) over all entries.
Tensor alignment_divergence(const Tensor& p, const Tensor& q, real eps);

struct AlignmentOptions {
  real eps = 1e-8;
  // Softmax over C per row before the divergence terms.
  bool normalize = true;
};

// |div(Fm_j, Fm_k) - div(Fv_j, Fv_k)| for one frame pair j < k.
// Fm_*: 1 x C motion rows; Fv_*: (H1*W1) x C visual slices.
Tensor motion_alignment_loss(const Tensor& fm_j, const Tensor& fm_k, const Tensor& fv_j, const Tensor& fv_k,
                             const AlignmentOptions& options = {});

// Centers the cloud at its centroid and scales it into the unit sphere.
geometry::Points normalize_cloud(std::span<const geometry::Vec3> cloud);

}  // namespace choir::inline CHOIR_PRECISION_NS::enc
