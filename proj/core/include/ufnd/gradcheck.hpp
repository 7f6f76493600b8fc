#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ufnd/optim.hpp"

namespace ufnd {

struct GradCheckOptions {
  double step = 1e-3;
  // When the model has more coordinates than this, a uniform sample of this
  // size (without replacement) is checked.
  std::size_t max_coords = 256;
  // Denominator floor: rel = |a - n| / max(|a|, |n|, floor).
  double floor = 1e-3;
  std::uint64_t seed = 0;
  // Optional piece identifier read after every loss() call. Coordinates whose
  // perturbations change it straddle a kink and are skipped.
  std::function<std::uint64_t()> signature;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::size_t coords_skipped = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares the analytic gradients already stored in `params[i]->grad` against
// central differences of `loss`. `loss` must be deterministic and must not
// touch the gradient buffers. Parameter values are restored on return.
template <typename T>
GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::vector<Parameter<T>*>& params,
                           const GradCheckOptions& opts = {});

}  // namespace ufnd
