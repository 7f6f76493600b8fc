#include "ufnd/cost.hpp"

namespace ufnd {

CostEstimate estimate_cost(const EncoderConfig& encoder, const HeadConfig& head,
                           std::size_t seq_len, std::size_t batch_size) {
  const double L = static_cast<double>(seq_len);
  const double d = static_cast<double>(encoder.d_model);
  const double ff = static_cast<double>(encoder.d_ff);
  const double b = static_cast<double>(batch_size);
  const double passes = 3.0;

  const double block = 4.0 * L * d * d + 2.0 * L * L * d + 2.0 * L * d * ff;
  const double h = static_cast<double>(head.d_in) * static_cast<double>(head.h1) +
                   static_cast<double>(head.h1) * static_cast<double>(head.h2) +
                   static_cast<double>(head.h2) * static_cast<double>(head.n_classes);

  CostEstimate c;
  c.per_block = passes * b * block;
  c.encoder = c.per_block * static_cast<double>(encoder.active_blocks().size());
  c.head = passes * b * h;
  c.total = c.encoder + c.head;
  return c;
}

}  // namespace ufnd
