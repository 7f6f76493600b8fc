#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ufnd/tensor.hpp"

namespace ufnd {

template <typename T>
struct Parameter {
  std::string name;
  BasicTensor<T> value;
  BasicTensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, BasicTensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.zero(); }
};

// L2 norm over every gradient entry, accumulated in double.
template <typename T>
double global_grad_norm(std::span<Parameter<T>* const> params);

// Scales all gradients by clip/norm when the global norm exceeds `clip`.
// Returns the pre-clip norm.
template <typename T>
double clip_global_norm(std::span<Parameter<T>* const> params, double clip);

struct AdamConfig {
  double lr = 0.003;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  BasicTensor<T> m;
  BasicTensor<T> v;
  std::uint64_t t = 0;

  explicit AdamState(const Shape& shape = {}) : m(shape), v(shape) {}
};

template <typename T>
void adam_step(Parameter<T>& param, AdamState<T>& state, const AdamConfig& cfg);

// One AdamState per parameter, in the order the parameters were registered.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamConfig cfg);

  void step();
  void zero_grad();

  const AdamConfig& config() const { return cfg_; }
  std::span<Parameter<T>* const> params() const { return params_; }
  std::vector<AdamState<T>>& states() { return states_; }
  const std::vector<AdamState<T>>& states() const { return states_; }

 private:
  std::vector<Parameter<T>*> params_;
  std::vector<AdamState<T>> states_;
  AdamConfig cfg_;
};

}  // namespace ufnd
