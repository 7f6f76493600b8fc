#include "ufnd/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "linear.hpp"

namespace ufnd {

void EncoderConfig::validate() const {
  if (vocab_size < Vocabulary::special_count) throw std::invalid_argument("vocab_size too small");
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw std::invalid_argument("d_model (" + std::to_string(d_model) +
                                ") must be a positive multiple of n_heads (" +
                                std::to_string(n_heads) + ")");
  }
  if (d_ff == 0) throw std::invalid_argument("d_ff must be positive");
  if (n_blocks_total == 0) throw std::invalid_argument("n_blocks_total must be positive");
  if (max_seq_len < 2) throw std::invalid_argument("max_seq_len must be >= 2");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw std::invalid_argument("dropout_rate must lie in [0, 1)");
  }
  for (std::size_t i = 0; i < block_subset.size(); ++i) {
    const auto b = block_subset[i];
    if (b < 1 || b > n_blocks_total) {
      throw std::invalid_argument("block index " + std::to_string(b) + " outside 1.." +
                                  std::to_string(n_blocks_total));
    }
    if (i > 0 && b <= block_subset[i - 1]) {
      throw std::invalid_argument("block subset must be strictly increasing");
    }
  }
}

std::vector<std::size_t> EncoderConfig::active_blocks() const {
  if (!block_subset.empty()) return block_subset;
  std::vector<std::size_t> all(n_blocks_total);
  for (std::size_t i = 0; i < n_blocks_total; ++i) all[i] = i + 1;
  return all;
}

EncoderConfig EncoderConfig::desk() { return EncoderConfig{}; }

EncoderConfig EncoderConfig::tiny() {
  EncoderConfig c;
  c.vocab_size = 100;
  c.d_model = 8;
  c.n_heads = 2;
  c.d_ff = 16;
  c.n_blocks_total = 2;
  c.max_seq_len = 16;
  return c;
}

EncoderConfig EncoderConfig::bert_base() {
  EncoderConfig c;
  c.vocab_size = 30522;
  c.d_model = 768;
  c.n_heads = 12;
  c.d_ff = 3072;
  c.n_blocks_total = 12;
  c.max_seq_len = 512;
  return c;
}

EncoderConfig select_blocks(const EncoderConfig& config, std::vector<std::size_t> subset) {
  if (subset.empty()) throw std::invalid_argument("block subset must not be empty");
  EncoderConfig out = config;
  out.block_subset = std::move(subset);
  out.validate();
  return out;
}

std::size_t block_param_count(const EncoderConfig& c) {
  const std::size_t d = c.d_model, f = c.d_ff;
  const std::size_t attention = 4 * (d * d + d);
  const std::size_t norms = 2 * (2 * d);
  const std::size_t feed_forward = (f * d + f) + (d * f + d);
  return attention + norms + feed_forward;
}

std::size_t embedding_param_count(const EncoderConfig& c) {
  return c.vocab_size * c.d_model + c.max_seq_len * c.d_model;
}

std::size_t param_count(const EncoderConfig& c) {
  return embedding_param_count(c) + c.active_blocks().size() * block_param_count(c);
}

std::string subset_label(const std::vector<std::size_t>& subset) {
  std::ostringstream os;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (i) os << ',';
    os << subset[i];
  }
  return os.str();
}

std::vector<std::size_t> parse_subset(const std::string& text) {
  std::vector<std::size_t> out;
  std::istringstream is(text);
  std::string part;
  while (std::getline(is, part, ',')) {
    if (part.empty()) throw std::invalid_argument("empty entry in block list '" + text + "'");
    std::size_t used = 0;
    const auto v = std::stoull(part, &used);
    if (used != part.size()) throw std::invalid_argument("bad block index '" + part + "'");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

template <typename T>
BlockParams<T>::BlockParams(std::size_t idx, const EncoderConfig& cfg, Rng& rng) : index(idx) {
  const std::size_t d = cfg.d_model, f = cfg.d_ff;
  const std::string p = "block" + std::to_string(idx) + ".";
  auto weight = [&](const std::string& name, std::size_t out, std::size_t in) {
    return Parameter<T>(p + name, xavier_init<T>({out, in}, rng));
  };
  auto constant = [&](const std::string& name, std::size_t n, T v) {
    return Parameter<T>(p + name, BasicTensor<T>({n}, v));
  };
  wq = weight("attn.q.weight", d, d);
  bq = constant("attn.q.bias", d, T(0));
  wk = weight("attn.k.weight", d, d);
  bk = constant("attn.k.bias", d, T(0));
  wv = weight("attn.v.weight", d, d);
  bv = constant("attn.v.bias", d, T(0));
  wo = weight("attn.out.weight", d, d);
  bo = constant("attn.out.bias", d, T(0));
  ln1_gain = constant("ln1.gain", d, T(1));
  ln1_bias = constant("ln1.bias", d, T(0));
  w1 = weight("ff1.weight", f, d);
  b1 = constant("ff1.bias", f, T(0));
  w2 = weight("ff2.weight", d, f);
  b2 = constant("ff2.bias", d, T(0));
  ln2_gain = constant("ln2.gain", d, T(1));
  ln2_bias = constant("ln2.bias", d, T(0));
}

template <typename T>
std::vector<Parameter<T>*> BlockParams<T>::parameters() {
  return {&wq, &bq, &wk, &bk, &wv, &bv, &wo, &bo, &ln1_gain, &ln1_bias,
          &w1, &b1, &w2, &b2, &ln2_gain, &ln2_bias};
}

template <typename T>
BasicTensor<T> self_attention(const BasicTensor<T>& hidden, std::span<const std::uint8_t> mask,
                              const BlockParams<T>& block, std::size_t n_heads,
                              AttentionCache<T>* cache) {
  const std::size_t L = hidden.dim(0), d = hidden.dim(1);
  if (mask.size() != L) throw ShapeError("attention mask length does not match sequence");
  if (std::none_of(mask.begin(), mask.end(), [](auto m) { return m != 0; })) {
    throw std::logic_error("self_attention: sample has no unmasked positions");
  }
  const std::size_t dh = d / n_heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  auto q = detail::linear(hidden, block.wq.value, block.bq.value);
  auto k = detail::linear(hidden, block.wk.value, block.bk.value);
  auto v = detail::linear(hidden, block.wv.value, block.bv.value);

  BasicTensor<T> probs({n_heads, L, L});
  BasicTensor<T> context({L, d});
  for (std::size_t h = 0; h < n_heads; ++h) {
    T* ph = probs.data() + h * L * L;
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < L; ++j) {
        T s = T(0);
        for (std::size_t c = 0; c < dh; ++c) s += q(i, off + c) * k(j, off + c);
        ph[i * L + j] = s * scale;
      }
      masked_softmax_row<T>(std::span<T>(ph + i * L, L), mask);
      for (std::size_t j = 0; j < L; ++j) {
        const T a = ph[i * L + j];
        if (a == T(0)) continue;
        for (std::size_t c = 0; c < dh; ++c) context(i, off + c) += a * v(j, off + c);
      }
    }
  }

  auto out = detail::linear(context, block.wo.value, block.bo.value);
  if (cache) {
    cache->input = hidden;
    cache->q = std::move(q);
    cache->k = std::move(k);
    cache->v = std::move(v);
    cache->probs = std::move(probs);
    cache->context = std::move(context);
  }
  return out;
}

template <typename T>
BasicTensor<T> self_attention_backward(const BasicTensor<T>& d_out, BlockParams<T>& block,
                                       std::size_t n_heads, const AttentionCache<T>& cache) {
  const std::size_t L = d_out.dim(0), d = d_out.dim(1);
  const std::size_t dh = d / n_heads;
  const T scale = static_cast<T>(1.0 / std::sqrt(static_cast<double>(dh)));

  auto d_context = detail::linear_backward(d_out, cache.context, block.wo, block.bo);

  BasicTensor<T> dq({L, d}), dk({L, d}), dv({L, d});
  std::vector<T> d_probs(L);
  for (std::size_t h = 0; h < n_heads; ++h) {
    const T* ph = cache.probs.data() + h * L * L;
    const std::size_t off = h * dh;
    for (std::size_t i = 0; i < L; ++i) {
      // dA[i, j] = dctx[i] . v[j]; dV[j] += A[i, j] * dctx[i]
      T dot = T(0);
      for (std::size_t j = 0; j < L; ++j) {
        const T a = ph[i * L + j];
        T s = T(0);
        for (std::size_t c = 0; c < dh; ++c) s += d_context(i, off + c) * cache.v(j, off + c);
        d_probs[j] = s;
        dot += s * a;
        if (a != T(0)) {
          for (std::size_t c = 0; c < dh; ++c) dv(j, off + c) += a * d_context(i, off + c);
        }
      }
      // Softmax backward; masked keys have a == 0 and receive no gradient.
      for (std::size_t j = 0; j < L; ++j) {
        const T a = ph[i * L + j];
        if (a == T(0)) continue;
        const T ds = a * (d_probs[j] - dot) * scale;
        for (std::size_t c = 0; c < dh; ++c) {
          dq(i, off + c) += ds * cache.k(j, off + c);
          dk(j, off + c) += ds * cache.q(i, off + c);
        }
      }
    }
  }

  auto dx = detail::linear_backward(dq, cache.input, block.wq, block.bq);
  auto dxk = detail::linear_backward(dk, cache.input, block.wk, block.bk);
  auto dxv = detail::linear_backward(dv, cache.input, block.wv, block.bv);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dxk[i] + dxv[i];
  return dx;
}

template <typename T>
BasicTensor<T> encoder_block(const BasicTensor<T>& hidden, std::span<const std::uint8_t> mask,
                             const BlockParams<T>& block, const EncoderConfig& cfg, Mode mode,
                             Rng& rng, BlockCache<T>* cache) {
  const T eps = static_cast<T>(cfg.ln_eps);
  auto attn = self_attention(hidden, mask, block, cfg.n_heads, cache ? &cache->attn : nullptr);
  auto attn_drop = dropout(attn, cfg.dropout_rate, mode, rng, cache ? &cache->drop1 : nullptr);
  for (std::size_t i = 0; i < attn_drop.size(); ++i) attn_drop[i] += hidden[i];
  auto h1 = layer_norm(attn_drop, block.ln1_gain.value, block.ln1_bias.value, eps,
                       cache ? &cache->ln1 : nullptr);

  auto ff_pre = detail::linear(h1, block.w1.value, block.b1.value);
  auto ff_act = gelu(ff_pre);
  auto ff_out = detail::linear(ff_act, block.w2.value, block.b2.value);
  auto ff_drop = dropout(ff_out, cfg.dropout_rate, mode, rng, cache ? &cache->drop2 : nullptr);
  for (std::size_t i = 0; i < ff_drop.size(); ++i) ff_drop[i] += h1[i];
  auto out = layer_norm(ff_drop, block.ln2_gain.value, block.ln2_bias.value, eps,
                        cache ? &cache->ln2 : nullptr);
  if (cache) {
    cache->h1 = std::move(h1);
    cache->ff_pre = std::move(ff_pre);
    cache->ff_act = std::move(ff_act);
  }
  return out;
}

template <typename T>
BasicTensor<T> encoder_block_backward(const BasicTensor<T>& d_out, BlockParams<T>& block,
                                      const EncoderConfig& cfg, const BlockCache<T>& cache) {
  (void)cfg;
  // out = LN2(h1 + drop2(ff_out))
  auto d_r2 = layer_norm_backward(d_out, block.ln2_gain.value, cache.ln2, block.ln2_gain.grad,
                                  block.ln2_bias.grad);
  BasicTensor<T> d_ff_out = d_r2;
  if (!cache.drop2.empty()) {
    for (std::size_t i = 0; i < d_ff_out.size(); ++i) d_ff_out[i] *= cache.drop2[i];
  }
  auto d_ff_act = detail::linear_backward(d_ff_out, cache.ff_act, block.w2, block.b2);
  for (std::size_t i = 0; i < d_ff_act.size(); ++i) d_ff_act[i] *= gelu_grad(cache.ff_pre[i]);
  auto d_h1 = detail::linear_backward(d_ff_act, cache.h1, block.w1, block.b1);
  for (std::size_t i = 0; i < d_h1.size(); ++i) d_h1[i] += d_r2[i];

  // h1 = LN1(x + drop1(attn))
  auto d_r1 = layer_norm_backward(d_h1, block.ln1_gain.value, cache.ln1, block.ln1_gain.grad,
                                  block.ln1_bias.grad);
  BasicTensor<T> d_attn = d_r1;
  if (!cache.drop1.empty()) {
    for (std::size_t i = 0; i < d_attn.size(); ++i) d_attn[i] *= cache.drop1[i];
  }
  auto dx = self_attention_backward(d_attn, block, cfg.n_heads, cache.attn);
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += d_r1[i];
  return dx;
}

namespace {

// Padded positions never feed the CLS row (their keys get zero attention
// weight), so the pooled path runs on the unpadded prefix only.
EncodedSample unpadded(const EncodedSample& s) {
  std::size_t n = 0;
  while (n < s.mask.size() && s.mask[n]) ++n;
  if (n == 0) throw std::logic_error("sample has no real positions");
  EncodedSample out;
  out.ids.assign(s.ids.begin(), s.ids.begin() + static_cast<std::ptrdiff_t>(n));
  out.mask.assign(n, 1);
  out.label = s.label;
  out.true_length = n;
  return out;
}

}  // namespace

template <typename T>
Encoder<T>::Encoder(EncoderConfig cfg, Rng& init_rng) : cfg_(std::move(cfg)) {
  cfg_.validate();
  token_embedding_ =
      Parameter<T>("embed.token", xavier_init<T>({cfg_.vocab_size, cfg_.d_model}, init_rng));
  position_embedding_ =
      Parameter<T>("embed.position", xavier_init<T>({cfg_.max_seq_len, cfg_.d_model}, init_rng));
  for (auto idx : cfg_.active_blocks()) blocks_.emplace_back(idx, cfg_, init_rng);
}

template <typename T>
std::vector<Parameter<T>*> Encoder<T>::parameters() {
  std::vector<Parameter<T>*> out{&token_embedding_, &position_embedding_};
  for (auto& b : blocks_) {
    for (auto* p : b.parameters()) out.push_back(p);
  }
  return out;
}

template <typename T>
BasicTensor<T> Encoder<T>::embed(const EncodedSample& sample) const {
  const std::size_t L = sample.ids.size(), d = cfg_.d_model;
  if (L > cfg_.max_seq_len) {
    throw ShapeError("sample length " + std::to_string(L) + " exceeds encoder max_seq_len " +
                     std::to_string(cfg_.max_seq_len));
  }
  if (sample.mask.size() != L) throw ShapeError("sample mask length does not match ids");
  BasicTensor<T> h({L, d});
  for (std::size_t i = 0; i < L; ++i) {
    const auto id = sample.ids[i];
    if (id < 0 || static_cast<std::size_t>(id) >= cfg_.vocab_size) {
      throw std::out_of_range("token id " + std::to_string(id) + " >= vocab_size " +
                              std::to_string(cfg_.vocab_size));
    }
    auto e = token_embedding_.value.row(static_cast<std::size_t>(id));
    auto p = position_embedding_.value.row(i);
    auto r = h.row(i);
    for (std::size_t c = 0; c < d; ++c) r[c] = e[c] + p[c];
  }
  return h;
}

template <typename T>
BasicTensor<T> Encoder<T>::encode_one(const EncodedSample& sample, Mode mode, Rng& rng,
                                      std::vector<BlockCache<T>>* caches) const {
  auto h = embed(sample);
  if (caches) caches->assign(blocks_.size(), BlockCache<T>{});
  for (std::size_t b = 0; b < blocks_.size(); ++b) {
    h = encoder_block(h, std::span<const std::uint8_t>(sample.mask), blocks_[b], cfg_, mode, rng,
                      caches ? &(*caches)[b] : nullptr);
  }
  last_blocks_executed_ = blocks_.size();
  return h;
}

template <typename T>
BasicTensor<T> Encoder<T>::forward(const SampleBatch& batch, Mode mode, Rng& rng, bool record) {
  const std::size_t d = cfg_.d_model;
  BasicTensor<T> pooled({batch.size(), d});
  recorded_batch_.clear();
  recorded_rng_.clear();
  if (record) {
    recorded_batch_ = batch;
    recorded_mode_ = mode;
    recorded_rng_.reserve(batch.size());
  }
  for (std::size_t s = 0; s < batch.size(); ++s) {
    if (record) recorded_rng_.push_back(rng);
    auto h = encode_one(unpadded(*batch[s]), mode, rng);
    auto cls = h.row(0);
    std::copy(cls.begin(), cls.end(), pooled.row(s).begin());
  }
  return pooled;
}

template <typename T>
void Encoder<T>::backward(const BasicTensor<T>& d_pooled) {
  if (recorded_batch_.empty()) throw std::logic_error("encoder backward without a recorded forward");
  if (d_pooled.rows() != recorded_batch_.size() || d_pooled.cols() != cfg_.d_model) {
    throw ShapeError("encoder backward gradient " + shape_string(d_pooled.shape()) +
                     " does not match recorded batch");
  }
  const std::size_t d = cfg_.d_model;
  std::vector<BlockCache<T>> caches;
  for (std::size_t s = 0; s < recorded_batch_.size(); ++s) {
    const auto sample = unpadded(*recorded_batch_[s]);
    Rng replay = recorded_rng_[s];
    encode_one(sample, recorded_mode_, replay, &caches);

    BasicTensor<T> dh({sample.ids.size(), d});
    auto src = d_pooled.row(s);
    std::copy(src.begin(), src.end(), dh.row(0).begin());
    for (std::size_t b = blocks_.size(); b-- > 0;) {
      dh = encoder_block_backward(dh, blocks_[b], cfg_, caches[b]);
    }
    for (std::size_t i = 0; i < sample.ids.size(); ++i) {
      auto g = dh.row(i);
      auto te = token_embedding_.grad.row(static_cast<std::size_t>(sample.ids[i]));
      auto pe = position_embedding_.grad.row(i);
      for (std::size_t c = 0; c < d; ++c) {
        te[c] += g[c];
        pe[c] += g[c];
      }
    }
  }
}

#define UFND_INSTANTIATE(T)                                                                       \
  template struct BlockParams<T>;                                                                 \
  template BasicTensor<T> self_attention(const BasicTensor<T>&, std::span<const std::uint8_t>,    \
                                         const BlockParams<T>&, std::size_t, AttentionCache<T>*); \
  template BasicTensor<T> self_attention_backward(const BasicTensor<T>&, BlockParams<T>&,         \
                                                  std::size_t, const AttentionCache<T>&);         \
  template BasicTensor<T> encoder_block(const BasicTensor<T>&, std::span<const std::uint8_t>,     \
                                        const BlockParams<T>&, const EncoderConfig&, Mode, Rng&,  \
                                        BlockCache<T>*);                                          \
  template BasicTensor<T> encoder_block_backward(const BasicTensor<T>&, BlockParams<T>&,          \
                                                 const EncoderConfig&, const BlockCache<T>&);     \
  template class Encoder<T>;

UFND_INSTANTIATE(float)
UFND_INSTANTIATE(double)

#undef UFND_INSTANTIATE

}  // namespace ufnd
