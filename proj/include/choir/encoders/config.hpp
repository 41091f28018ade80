#pragma once

#include "choir/ad/real.hpp"
#include <cstddef>

namespace choir::inline CHOIR_PRECISION_NS::enc {

struct EncoderConfig {
  std::size_t T = 8;         // frames per clip
  std::size_t H1 = 4;        // patch grid rows
  std::size_t W1 = 4;        // patch grid cols
  std::size_t D = 4;         // observation channels per patch
  std::size_t C = 32;        // feature width
  std::size_t N = 256;       // object points
  std::size_t heads = 4;
  std::size_t st_depth = 2;  // joint space-time attention blocks
  std::size_t knn_k = 8;     // point encoder neighborhood

  std::size_t patches() const { return H1 * W1; }
  std::size_t tokens() const { return T * H1 * W1; }
  // Throws UsageError on an inconsistent configuration.
  void validate() const;
  bool operator==(const EncoderConfig&) const = default;
};

}  // namespace choir::inline CHOIR_PRECISION_NS::enc
