#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ufnd/checkpoint.hpp"
#include "ufnd/metrics.hpp"
#include "ufnd/model.hpp"
#include "ufnd/textprep.hpp"
#include "ufnd/train_config.hpp"

namespace ufnd {

// Raised in checked mode on the first non-finite loss, gradient or weight.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Per-epoch shuffle keyed by (seed, epoch). A trailing batch of one sample is
// merged into the previous batch.
std::vector<std::vector<std::size_t>> batch_iterator(std::size_t n, std::size_t batch_size,
                                                     std::size_t epoch, std::uint64_t seed);

struct StepRecord {
  double loss = 0.0;
  double pre_clip_norm = 0.0;
  double post_clip_norm = 0.0;
  std::size_t batch_size = 0;

  bool operator==(const StepRecord&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean of step losses
  Metrics val;
  std::vector<StepRecord> steps;
  bool improved = false;
  bool rolled_back = false;
  double seconds = 0.0;  // wall clock, never compared
};

struct TrainReport {
  std::string dataset;
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0.0;
  Metrics best_val;
  double total_seconds = 0.0;
  std::map<std::string, std::string> metadata;

  // Structured text, one line per epoch. Timings are left out so identical
  // runs give identical files.
  std::string to_text() const;
  static std::string summary_header();
  // dataset,batch_size,best_epoch,accuracy,precision,recall,f1
  std::string summary_row() const;
  std::vector<double> loss_trace() const;
};

struct TrainResult {
  Checkpoint best;  // best-validation state
  Checkpoint last;  // state after the final epoch, usable for resume
  TrainReport report;
};

struct TrainOptions {
  std::string dataset = "train";
  std::uint64_t vocab_hash = 0;
  // Continue from a `last` checkpoint instead of starting fresh.
  const Checkpoint* resume = nullptr;
  // Stop after this many completed epochs (0 = cfg.epochs).
  std::size_t stop_after = 0;
  std::function<void(const EpochRecord&)> on_epoch;
};

// Hash of the resolved model + train configuration.
std::string config_hash(const ModelConfig& model, const TrainConfig& train);

TrainResult train(Model<float>& model, const EncodedSet& train_set, const EncodedSet& val_set,
                  const TrainConfig& cfg, const TrainOptions& opts = {});

struct Evaluation {
  Confusion confusion;
  Metrics metrics;
  std::vector<int> predictions;
  double mean_loss = 0.0;
};

Evaluation evaluate_detailed(Model<float>& model, const EncodedSet& set,
                             std::size_t batch_size = 256);
Metrics evaluate(Model<float>& model, const EncodedSet& set);

}  // namespace ufnd
