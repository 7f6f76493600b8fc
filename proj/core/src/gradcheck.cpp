#include "ufnd/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ufnd/rng.hpp"

namespace ufnd {

template <typename T>
GradCheckResult grad_check(const std::function<double()>& loss,
                           const std::vector<Parameter<T>*>& params,
                           const GradCheckOptions& opts) {
  struct Coord {
    std::size_t param;
    std::size_t index;
  };
  std::vector<Coord> coords;
  for (std::size_t p = 0; p < params.size(); ++p) {
    for (std::size_t i = 0; i < params[p]->value.size(); ++i) coords.push_back({p, i});
  }

  if (coords.size() > opts.max_coords) {
    // Partial Fisher-Yates: the first max_coords entries are the sample.
    Rng rng(opts.seed, "gradcheck");
    for (std::size_t i = 0; i < opts.max_coords; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng.below(coords.size() - i));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(opts.max_coords);
  }

  GradCheckResult result;
  std::uint64_t base_signature = 0;
  if (opts.signature) {
    loss();
    base_signature = opts.signature();
  }
  for (const auto& c : coords) {
    auto& param = *params[c.param];
    T& slot = param.value[c.index];
    const T original = slot;

    bool kink = false;
    slot = static_cast<T>(original + opts.step);
    const double up = loss();
    if (opts.signature) kink = opts.signature() != base_signature;
    slot = static_cast<T>(original - opts.step);
    const double down = loss();
    if (opts.signature) kink = kink || opts.signature() != base_signature;
    slot = original;
    if (kink) {
      ++result.coords_skipped;
      continue;
    }

    // The perturbation actually applied, after rounding to T.
    const double h = (static_cast<double>(static_cast<T>(original + opts.step)) -
                      static_cast<double>(static_cast<T>(original - opts.step)));
    const double numeric = (up - down) / h;
    const double analytic = param.grad[c.index];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), opts.floor});
    const double rel = std::abs(analytic - numeric) / denom;

    ++result.coords_checked;
    if (rel > result.max_rel_error) {
      result.max_rel_error = rel;
      result.worst_param = param.name;
      result.worst_index = c.index;
      result.worst_analytic = analytic;
      result.worst_numeric = numeric;
    }
  }
  return result;
}

template GradCheckResult grad_check(const std::function<double()>&,
                                    const std::vector<Parameter<float>*>&,
                                    const GradCheckOptions&);
template GradCheckResult grad_check(const std::function<double()>&,
                                    const std::vector<Parameter<double>*>&,
                                    const GradCheckOptions&);

}  // namespace ufnd
