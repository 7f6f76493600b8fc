#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ufnd/ops.hpp"
#include "ufnd/optim.hpp"
#include "ufnd/rng.hpp"
#include "ufnd/tensor.hpp"

namespace ufnd {

// Fine-tuning head: pooled -> Linear(h1) -> BN -> ReLU -> Dropout
//                          -> Linear(h2) -> BN -> ReLU -> Dropout
//                          -> Linear(n_classes) -> log_softmax
struct HeadConfig {
  std::size_t d_in = 64;
  std::size_t h1 = 200;
  std::size_t h2 = 150;
  std::size_t n_classes = 2;
  double dropout_rate = 0.1;
  double bn_momentum = 0.1;  // weight of the new batch statistics
  double bn_eps = 1e-5;

  void validate() const;
  std::vector<std::size_t> widths() const { return {d_in, h1, h2, n_classes}; }

  bool operator==(const HeadConfig&) const = default;
};

std::size_t param_count(const HeadConfig& config);

template <typename T>
struct BatchNorm {
  Parameter<T> gain;
  Parameter<T> bias;
  BasicTensor<T> running_mean;
  BasicTensor<T> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  BatchNorm() = default;
  BatchNorm(const std::string& name, std::size_t width, double momentum, double eps);
};

template <typename T>
struct BatchNormCache {
  BasicTensor<T> normalized;
  std::vector<T> inv_std;  // per feature
  Mode mode = Mode::eval;
};

// Train mode normalizes with the batch's population statistics and updates
// the running averages; eval mode uses the running statistics.
template <typename T>
BasicTensor<T> bn_forward(const BasicTensor<T>& x, BatchNorm<T>& state, Mode mode,
                          BatchNormCache<T>* cache = nullptr);

template <typename T>
BasicTensor<T> bn_backward(const BasicTensor<T>& dy, BatchNorm<T>& state,
                           const BatchNormCache<T>& cache);

template <typename T>
class Head {
 public:
  Head(HeadConfig cfg, Rng& init_rng);

  const HeadConfig& config() const { return cfg_; }

  // pooled: [batch, d_in] -> log-probs [batch, n_classes]. Keeps what
  // backward() needs from the most recent call.
  BasicTensor<T> forward(const BasicTensor<T>& pooled, Mode mode, Rng& rng);
  // Accumulates parameter gradients; returns dL/dpooled.
  BasicTensor<T> backward(const BasicTensor<T>& d_log_probs);

  std::vector<Parameter<T>*> parameters();
  // Running statistics, which are state but not trained.
  std::vector<std::pair<std::string, BasicTensor<T>*>> buffers();

  Parameter<T>& l1_weight() { return l1_w_; }
  BatchNorm<T>& bn1() { return bn1_; }
  BatchNorm<T>& bn2() { return bn2_; }

  // Hash of which ReLU units were active in the most recent forward. Equal
  // signatures mean the head stayed on one linear piece.
  std::uint64_t activation_signature() const;

  // Widths seen by the most recent forward, input first.
  const std::vector<std::size_t>& traced_widths() const { return traced_widths_; }

 private:
  HeadConfig cfg_;
  Parameter<T> l1_w_, l1_b_;
  BatchNorm<T> bn1_;
  Parameter<T> l2_w_, l2_b_;
  BatchNorm<T> bn2_;
  Parameter<T> l3_w_, l3_b_;

  struct Cache {
    BasicTensor<T> input;
    BatchNormCache<T> bn1, bn2;
    BasicTensor<T> relu1, relu2;  // post-ReLU, pre-dropout
    std::vector<T> drop1, drop2;
    BasicTensor<T> after_drop1, after_drop2;
    BasicTensor<T> log_probs;
  } cache_;
  std::vector<std::size_t> traced_widths_;
};

// Argmax per row; ties go to the lower class index.
template <typename T>
std::vector<int> predict(const BasicTensor<T>& log_probs);

}  // namespace ufnd
