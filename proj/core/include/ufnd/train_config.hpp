#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ufnd/model.hpp"
#include "ufnd/optim.hpp"

namespace ufnd {

// What happens to the best-validation weights during training.
enum class BestPolicy {
  rollback,  // restore the best weights whenever an epoch fails to improve
  select,    // keep training from the current weights; only return the best
};

std::string to_string(BestPolicy p);
BestPolicy parse_best_policy(const std::string& s);

inline const std::vector<std::size_t>& table_batch_sizes() {
  static const std::vector<std::size_t> sizes{16, 32, 64, 128, 256, 512, 1024};
  return sizes;
}

struct TrainConfig {
  double lr = 0.003;
  double clip = 1.0;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double dropout_rate = 0.1;
  std::uint64_t seed = 1;
  bool freeze_encoder = true;
  std::size_t max_seq_len = 120;
  bool preprocessing_enabled = true;
  BestPolicy best_policy = BestPolicy::rollback;
  // Abort on the first non-finite loss or gradient.
  bool checked = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
  AdamConfig adam() const { return {lr, beta1, beta2, adam_eps}; }

  bool operator==(const TrainConfig&) const = default;
};

// Copies the training-level knobs (dropout, freezing, sequence length) into
// a model configuration.
ModelConfig apply_train_config(ModelConfig model, const TrainConfig& train);

}  // namespace ufnd
