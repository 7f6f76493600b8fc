#include "ufnd/train_config.hpp"

#include <stdexcept>

namespace ufnd {

std::string to_string(BestPolicy p) { return p == BestPolicy::rollback ? "rollback" : "select"; }

BestPolicy parse_best_policy(const std::string& s) {
  if (s == "rollback") return BestPolicy::rollback;
  if (s == "select") return BestPolicy::select;
  throw std::invalid_argument("unknown best policy '" + s + "' (expected rollback or select)");
}

void TrainConfig::validate() const {
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(clip > 0.0)) throw std::invalid_argument("clip must be > 0");
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must be in [0, 1)");
  }
  if (max_seq_len < 2) throw std::invalid_argument("max_seq_len must be >= 2");
}

ModelConfig apply_train_config(ModelConfig model, const TrainConfig& train) {
  model.encoder.dropout_rate = train.dropout_rate;
  model.head.dropout_rate = train.dropout_rate;
  model.encoder.max_seq_len = train.max_seq_len;
  model.freeze_encoder = train.freeze_encoder;
  return model;
}

}  // namespace ufnd
