#pragma once

#include <cstddef>

#include "choir/ad/tensor.hpp"
#include "choir/model/model.hpp"

namespace choir::inline CHOIR_PRECISION_NS::model {

struct DiceFocalParams {
  real eps = 1e-10;
  real alpha = 0.25;
  real gamma = 2.0;
  real clamp = 1e-7;  // focal logs use x in [clamp, 1 - clamp]
};

// Dice (both polarities) plus focal loss, evaluated per row of `x` against
// `y` (same shape), averaged over rows. Returns shape [1].
Tensor dice_focal(const Tensor& x, const Tensor& y, const DiceFocalParams& p = {});
// Components of dice_focal for one row vector, for inspection.
Tensor dice_part(const Tensor& x, const Tensor& y, const DiceFocalParams& p = {});
Tensor focal_part(const Tensor& x, const Tensor& y, const DiceFocalParams& p = {});

// -log softmax(logits)[label] for 1 x n logits.
Tensor cross_entropy(const Tensor& logits, std::size_t label);

struct Targets {
  Tensor affordance;  // N x 1 in [0, 1]
  Tensor contact;     // T x V in {0, 1}
  std::size_t label = 0;
};

struct LossBreakdown {
  Tensor total;
  Tensor affordance, contact, semantic;
};

// L = L_a + L_c + L_s. The affordance target is binarized at 0.5 unless the
// config asks for the continuous target; the class term is omitted when the
// semantic head is disabled.
LossBreakdown loss_total(const ModelOutputs& out, const Targets& gt, const ModelConfig& config);

}  // namespace choir::inline CHOIR_PRECISION_NS::model
