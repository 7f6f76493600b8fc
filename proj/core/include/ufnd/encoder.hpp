#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ufnd/ops.hpp"
#include "ufnd/optim.hpp"
#include "ufnd/rng.hpp"
#include "ufnd/tensor.hpp"
#include "ufnd/textprep.hpp"

namespace ufnd {

struct EncoderConfig {
  std::size_t vocab_size = 8000;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t d_ff = 256;
  std::size_t n_blocks_total = 12;
  // 1-based, strictly increasing. Empty means every block.
  std::vector<std::size_t> block_subset;
  std::size_t max_seq_len = 120;
  double dropout_rate = 0.1;
  double ln_eps = 1e-12;

  void validate() const;
  std::size_t head_dim() const { return d_model / n_heads; }
  // block_subset with the empty case expanded to {1..n_blocks_total}.
  std::vector<std::size_t> active_blocks() const;

  static EncoderConfig desk();
  static EncoderConfig tiny();
  static EncoderConfig bert_base();

  bool operator==(const EncoderConfig&) const = default;
};

// Returns a copy of `config` keeping only `subset`. Throws
// std::invalid_argument for empty, unsorted, or out-of-range subsets.
EncoderConfig select_blocks(const EncoderConfig& config, std::vector<std::size_t> subset);

std::size_t block_param_count(const EncoderConfig& config);
std::size_t embedding_param_count(const EncoderConfig& config);
std::size_t param_count(const EncoderConfig& config);

// "1,3,5"
std::string subset_label(const std::vector<std::size_t>& subset);
std::vector<std::size_t> parse_subset(const std::string& text);

template <typename T>
struct BlockParams {
  std::size_t index = 0;  // 1-based position in the full stack
  Parameter<T> wq, bq, wk, bk, wv, bv, wo, bo;
  Parameter<T> ln1_gain, ln1_bias;
  Parameter<T> w1, b1, w2, b2;
  Parameter<T> ln2_gain, ln2_bias;

  BlockParams() = default;
  BlockParams(std::size_t index, const EncoderConfig& cfg, Rng& rng);
  std::vector<Parameter<T>*> parameters();
};

template <typename T>
struct AttentionCache {
  BasicTensor<T> input;    // [L, d]
  BasicTensor<T> q, k, v;  // [L, d]
  BasicTensor<T> probs;    // [heads, L, L]
  BasicTensor<T> context;  // [L, d], heads concatenated
};

// Multi-head scaled dot-product self-attention over one sequence.
// hidden: [L, d]; mask: L entries, 0 marks padding keys.
template <typename T>
BasicTensor<T> self_attention(const BasicTensor<T>& hidden, std::span<const std::uint8_t> mask,
                              const BlockParams<T>& block, std::size_t n_heads,
                              AttentionCache<T>* cache = nullptr);

template <typename T>
BasicTensor<T> self_attention_backward(const BasicTensor<T>& d_out, BlockParams<T>& block,
                                       std::size_t n_heads, const AttentionCache<T>& cache);

template <typename T>
struct BlockCache {
  AttentionCache<T> attn;
  std::vector<T> drop1;
  LayerNormCache<T> ln1;
  BasicTensor<T> h1;
  BasicTensor<T> ff_pre;  // W1 h1 + b1
  BasicTensor<T> ff_act;  // gelu(ff_pre)
  std::vector<T> drop2;
  LayerNormCache<T> ln2;
};

// Post-norm block:
//   h1  = LN(x + Dropout(Attention(x)))
//   out = LN(h1 + Dropout(W2 gelu(W1 h1)))
template <typename T>
BasicTensor<T> encoder_block(const BasicTensor<T>& hidden, std::span<const std::uint8_t> mask,
                             const BlockParams<T>& block, const EncoderConfig& cfg, Mode mode,
                             Rng& rng, BlockCache<T>* cache = nullptr);

template <typename T>
BasicTensor<T> encoder_block_backward(const BasicTensor<T>& d_out, BlockParams<T>& block,
                                      const EncoderConfig& cfg, const BlockCache<T>& cache);

using SampleBatch = std::vector<const EncodedSample*>;

template <typename T>
class Encoder {
 public:
  Encoder(EncoderConfig cfg, Rng& init_rng);

  const EncoderConfig& config() const { return cfg_; }
  std::vector<Parameter<T>*> parameters();
  Parameter<T>& token_embedding() { return token_embedding_; }
  Parameter<T>& position_embedding() { return position_embedding_; }
  std::vector<BlockParams<T>>& blocks() { return blocks_; }
  const std::vector<BlockParams<T>>& blocks() const { return blocks_; }

  // Token plus position embedding: [L, d_model].
  BasicTensor<T> embed(const EncodedSample& sample) const;

  // Full stack for one sample: [L, d_model] hidden states of the last block.
  BasicTensor<T> encode_one(const EncodedSample& sample, Mode mode, Rng& rng,
                            std::vector<BlockCache<T>>* caches = nullptr) const;

  // CLS-pooled output [batch, d_model]. With `record` set, the dropout stream
  // is snapshotted per sample so backward() can replay the exact forward.
  BasicTensor<T> forward(const SampleBatch& batch, Mode mode, Rng& rng, bool record = false);

  // Accumulates parameter gradients for the batch given to the last recorded
  // forward().
  void backward(const BasicTensor<T>& d_pooled);

  // Number of blocks executed by the most recent encode_one/forward call.
  std::size_t last_blocks_executed() const { return last_blocks_executed_; }

 private:
  EncoderConfig cfg_;
  Parameter<T> token_embedding_;
  Parameter<T> position_embedding_;
  std::vector<BlockParams<T>> blocks_;

  SampleBatch recorded_batch_;
  std::vector<Rng> recorded_rng_;
  Mode recorded_mode_ = Mode::eval;
  mutable std::size_t last_blocks_executed_ = 0;
};

}  // namespace ufnd
