#include "ufnd/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace ufnd {

Confusion confusion(std::span<const int> predictions, std::span<const int> targets) {
  if (predictions.size() != targets.size()) {
    throw std::invalid_argument("confusion: " + std::to_string(predictions.size()) +
                                " predictions vs " + std::to_string(targets.size()) + " targets");
  }
  if (predictions.empty()) throw std::invalid_argument("confusion: empty label vectors");
  Confusion c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i], t = targets[i];
    if ((p != 0 && p != 1) || (t != 0 && t != 1)) {
      throw std::invalid_argument("confusion: invalid label at position " + std::to_string(i));
    }
    if (p == 1 && t == 1) ++c.tp;
    else if (p == 1 && t == 0) ++c.fp;
    else if (p == 0 && t == 1) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Metrics compute_metrics(const Confusion& c) {
  const auto total = c.total();
  if (total == 0) throw std::invalid_argument("compute_metrics: empty confusion");
  Metrics m;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
  if (c.tp + c.fp > 0) {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  } else {
    m.degenerate = true;
  }
  if (c.tp + c.fn > 0) {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  } else {
    m.degenerate = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.degenerate = true;
  }
  return m;
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

}  // namespace ufnd
