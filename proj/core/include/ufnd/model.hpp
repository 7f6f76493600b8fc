#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ufnd/classifier.hpp"
#include "ufnd/encoder.hpp"

namespace ufnd {

struct ModelConfig {
  EncoderConfig encoder;
  HeadConfig head;
  // Frozen encoders are excluded from backward and from the optimizer.
  bool freeze_encoder = true;

  void validate() const;
  // Tiny configuration used for gradient checks and toy runs.
  static ModelConfig tiny();
  static ModelConfig desk();

  bool operator==(const ModelConfig&) const = default;
};

std::size_t param_count(const ModelConfig& config);

template <typename T>
class Model {
 public:
  // Encoder and head draw from independent init streams of `seed`.
  Model(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  Encoder<T>& encoder() { return *encoder_; }
  const Encoder<T>& encoder() const { return *encoder_; }
  Head<T>& head() { return *head_; }

  // Returns log-probabilities [batch, n_classes]. With `for_backward`, keeps
  // what backward() needs.
  BasicTensor<T> forward(const SampleBatch& batch, Mode mode, Rng& rng, bool for_backward = true);
  void backward(const BasicTensor<T>& d_log_probs);

  std::vector<Parameter<T>*> parameters();
  std::vector<Parameter<T>*> trainable_parameters();
  // ReLU pattern of the most recent forward (the only non-smooth op).
  std::uint64_t activation_signature() const { return head_->activation_signature(); }
  // Named state tensors: every parameter value plus the BN running stats.
  std::vector<std::pair<std::string, BasicTensor<T>*>> state_tensors();
  void zero_grad();

  // Fresh head weights from the named stream of `seed`.
  void reinit_head(std::uint64_t seed, std::string_view stream);
  // Copies encoder parameter values from a model with the same encoder shape.
  void copy_encoder_from(Model& other);

 private:
  ModelConfig cfg_;
  std::unique_ptr<Encoder<T>> encoder_;
  std::unique_ptr<Head<T>> head_;
  bool encoder_recorded_ = false;
};

}  // namespace ufnd
