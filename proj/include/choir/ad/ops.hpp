#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "choir/ad/tensor.hpp"

// Differentiable primitives. Every op validates operand shapes, checks its
// forward values are finite, and records a backward rule when a graph is
// active and any operand requires grad.
//
// Tensors are interpreted as matrices: rows = product of leading dims,
// cols = last dim. Binary elementwise ops broadcast a dimension of size 1.
namespace choir::inline CHOIR_PRECISION_NS::ad {

enum class Axis { Rows, Cols };

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, real s);
Tensor add_scalar(const Tensor& a, real s);
Tensor neg(const Tensor& a);

// (R x K) * (K x C)
Tensor matmul(const Tensor& a, const Tensor& b);
// (R x K) * (C x K)^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);

Tensor softmax_rows(const Tensor& a);
Tensor log_softmax_rows(const Tensor& a);
// Normalizes each row to zero mean and unit variance (no affine terms).
Tensor layer_norm_rows(const Tensor& a, real eps = 1e-9);

Tensor gelu(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor log(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor sqrt(const Tensor& a);
Tensor abs(const Tensor& a);
// Gradient passes only where lo <= a <= hi.
Tensor clamp(const Tensor& a, real lo, real hi);

Tensor concat(std::span<const Tensor> parts, Axis axis);
Tensor concat(std::initializer_list<Tensor> parts, Axis axis);
Tensor slice(const Tensor& a, Axis axis, std::size_t start, std::size_t count);
Tensor gather_rows(const Tensor& a, std::span<const std::size_t> index);
Tensor reshape(const Tensor& a, Shape shape);

// Sum over every element -> shape [1].
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// Axis::Rows collapses rows -> (1 x C); Axis::Cols collapses columns -> (R x 1).
Tensor sum(const Tensor& a, Axis axis);
Tensor mean(const Tensor& a, Axis axis);

// Columnwise max over consecutive groups of `group` rows: (G*group x C) -> (G x C).
Tensor max_pool_groups(const Tensor& a, std::size_t group);
// Columnwise max over all rows -> (1 x C).
Tensor max_rows(const Tensor& a);

// Inverted dropout with a mask drawn from `rng`; identity when rate == 0.
Tensor dropout(const Tensor& a, real rate, std::mt19937_64& rng);

}  // namespace choir::inline CHOIR_PRECISION_NS::ad
