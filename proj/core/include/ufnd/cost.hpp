#pragma once

#include <cstddef>

#include "ufnd/classifier.hpp"
#include "ufnd/encoder.hpp"

namespace ufnd {

// Multiply-accumulate counts for one training step. Backward is counted as
// twice the forward, so every field is 3x its forward-only count.
struct CostEstimate {
  double per_block = 0.0;  // one block, whole batch
  double encoder = 0.0;    // all active blocks, whole batch
  double head = 0.0;       // whole batch
  double total = 0.0;
};

// Per block and sample: 4*L*d^2 (projections) + 2*L^2*d (scores and
// context) + 2*L*d*d_ff (feed-forward). Head: d*h1 + h1*h2 + h2*n.
// Embedding lookups are not counted.
CostEstimate estimate_cost(const EncoderConfig& encoder, const HeadConfig& head,
                           std::size_t seq_len, std::size_t batch_size);

}  // namespace ufnd
