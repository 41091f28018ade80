#pragma once

#include <cstddef>
#include <vector>

#include "choir/ad/tensor.hpp"

namespace choir::inline CHOIR_PRECISION_NS::ad {

struct AttentionResult {
  Tensor output;                // Lq x C, heads concatenated along columns
  std::vector<Tensor> weights;  // one Lq x Lk row-stochastic matrix per head
};

// Multi-head scaled dot-product attention on already-projected inputs.
// q: Lq x C, k and v: Lk x C; head h uses columns [h*d, (h+1)*d), d = C/heads.
AttentionResult scaled_dot_product_attention(const Tensor& q, const Tensor& k, const Tensor& v,
                                             std::size_t heads);

}  // namespace choir::inline CHOIR_PRECISION_NS::ad
