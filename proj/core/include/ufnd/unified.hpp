#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ufnd/checkpoint.hpp"
#include "ufnd/corpus.hpp"
#include "ufnd/metrics.hpp"
#include "ufnd/model.hpp"
#include "ufnd/table.hpp"
#include "ufnd/textprep.hpp"
#include "ufnd/train_config.hpp"
#include "ufnd/trainer.hpp"

namespace ufnd {

// (baseline - accuracy) <= threshold. Throws std::invalid_argument for a
// non-positive threshold or arguments outside (0, 1].
bool check_acceptable(double accuracy, double baseline, double threshold);

struct BaselineEntry {
  std::string dataset;
  double accuracy = 0.0;
  std::string source;
};

class BaselineTable {
 public:
  BaselineTable() = default;
  explicit BaselineTable(std::vector<BaselineEntry> entries);

  // Delimited file with header dataset,accuracy,source.
  static BaselineTable load(const std::string& path);
  static BaselineTable uniform(const std::vector<std::string>& datasets, double accuracy,
                               const std::string& source);

  double at(const std::string& dataset) const;
  const std::vector<BaselineEntry>& entries() const { return entries_; }
  std::string to_delimited() const;

 private:
  std::vector<BaselineEntry> entries_;
};

struct PreparedDataset {
  std::string name;
  EncodedSet train;
  EncodedSet test;
};

// Every dataset encoded against one vocabulary built from the training parts
// only, so phase-1 encoders can move into phase 2.
struct PreparedData {
  PrepConfig prep;
  Vocabulary vocab;
  std::vector<PreparedDataset> datasets;
  PreparedDataset combined;
};

PreparedData prepare(std::span<const SplitCorpus> splits, const std::vector<std::string>& names,
                     const PrepConfig& prep, std::size_t vocab_limit, std::size_t min_freq = 1);

// The train config actually used for `data`: sequence length and the
// preprocessing flag follow the data's PrepConfig.
TrainConfig resolve_train_config(TrainConfig cfg, const PrepConfig& prep, std::size_t batch_size);
ModelConfig resolve_model_config(const ModelConfig& base, const TrainConfig& cfg,
                                 std::size_t vocab_size);

struct PhaseOneCell {
  std::size_t config_index = 0;
  std::string dataset;
  std::size_t batch_size = 0;
  Metrics val;
  std::size_t best_epoch = 0;
};

struct PhaseOneChoice {
  std::string dataset;
  std::size_t batch_size = 0;
  Metrics val;
  double baseline = 0.0;
  double deficit = 0.0;
  bool acceptable = false;
};

struct PhaseOneCandidate {
  std::size_t index = 0;
  std::vector<PhaseOneChoice> choices;  // one per dataset
  bool feasible = false;
  double mean_accuracy = 0.0;
  double cost = 0.0;  // summed estimate_cost at the chosen batch sizes
};

struct PhaseOneResult {
  bool accepted = false;
  double threshold = 0.0;
  std::size_t selected = 0;  // candidate index, meaningful when accepted
  TrainConfig shared;
  std::vector<PhaseOneCandidate> candidates;
  std::vector<PhaseOneCell> cells;
  // Smallest deficit per dataset over every candidate.
  std::vector<std::string> datasets;
  std::vector<double> min_deficits;
  // Best-validation checkpoints of the selected candidate, one per dataset.
  std::vector<Checkpoint> checkpoints;

  std::string to_text() const;
};

PhaseOneResult phase_one(const PreparedData& data, const ModelConfig& base,
                         const std::vector<TrainConfig>& grid,
                         const std::vector<std::size_t>& batch_sizes,
                         const BaselineTable& baselines, double threshold);

// Table I shape for one candidate: rows are batch sizes, columns are the four
// metrics of one dataset (dataset empty) or of every dataset side by side.
Table table_one(const PhaseOneResult& result, std::size_t candidate, const std::string& dataset = "");

struct PhaseTwoResult {
  TrainResult run;
  std::size_t batch_size = 0;
  // Head tensors right after re-initialization.
  std::vector<NamedTensor> initial_head;
  std::string encoder_source;  // "fresh" or the phase-1 dataset it came from
};

// Index of the phase-1 checkpoint whose encoder phase 2 starts from: highest
// best-validation accuracy, ties to the earlier dataset.
std::size_t encoder_source_index(const PhaseOneResult& result);

PhaseTwoResult phase_two(const PreparedData& data, const ModelConfig& base, const TrainConfig& shared,
                         std::size_t batch_size, const Checkpoint* encoder_source,
                         const std::string& source_name = "fresh");

std::vector<PhaseTwoResult> phase_two_sweep(const PreparedData& data, const ModelConfig& base,
                                            const TrainConfig& shared,
                                            const std::vector<std::size_t>& batch_sizes,
                                            const Checkpoint* encoder_source,
                                            const std::string& source_name = "fresh");

// Tables V/VI shape: batch size x (accuracy, precision, recall, f1).
Table sweep_table(const std::string& title, const std::vector<PhaseTwoResult>& runs);

struct PreprocessingRun {
  PrepConfig prep;
  double mean_true_length = 0.0;
  std::vector<PhaseTwoResult> runs;
  double wall_seconds = 0.0;
  Table table;
};

struct PreprocessingComparison {
  PreprocessingRun without;
  PreprocessingRun with;
  double cost_without = 0.0;
  double cost_with = 0.0;
  double cost_ratio = 0.0;

  // Deterministic summary; wall times are left to the manifest.
  std::string to_text() const;
};

// Phase 2 twice, preprocessing off at the longer length and on at the
// shorter one. Each mode builds its own vocabulary and starts from a fresh
// encoder, since the phase-1 token embeddings belong to one vocabulary.
PreprocessingComparison compare_preprocessing(std::span<const SplitCorpus> splits,
                                              const std::vector<std::string>& names,
                                              const ModelConfig& base, const TrainConfig& shared,
                                              const std::vector<std::size_t>& batch_sizes,
                                              const PrepConfig& without, const PrepConfig& with,
                                              std::size_t vocab_limit);

struct AblationGrid {
  std::vector<std::vector<std::size_t>> subsets{{1, 3, 5, 7, 9, 11}, {1, 5, 9}, {1, 9}, {5}};
  std::vector<std::size_t> batch_sizes{16, 32, 64, 128};
};

struct AblationRow {
  std::vector<std::size_t> subset;
  std::size_t batch_size = 0;
  Metrics metrics;
  std::size_t param_count = 0;  // encoder parameters

  // "1,3,5,7,9,11 (32)"
  std::string label() const;
};

struct AblationResult {
  std::vector<AblationRow> rows;
  Table table() const;
};

// Pruned configurations train from scratch on the combined data.
AblationResult ablate(const PreparedDataset& combined, const ModelConfig& base,
                      const TrainConfig& shared, const AblationGrid& grid,
                      std::uint64_t vocab_hash = 0);

}  // namespace ufnd
