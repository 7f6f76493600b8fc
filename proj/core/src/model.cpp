#include "ufnd/model.hpp"

#include <stdexcept>

namespace ufnd {

void ModelConfig::validate() const {
  encoder.validate();
  head.validate();
  if (head.d_in != encoder.d_model) {
    throw std::invalid_argument("head d_in (" + std::to_string(head.d_in) +
                                ") must equal encoder d_model (" +
                                std::to_string(encoder.d_model) + ")");
  }
}

ModelConfig ModelConfig::tiny() {
  ModelConfig c;
  c.encoder = EncoderConfig::tiny();
  c.head.d_in = c.encoder.d_model;
  return c;
}

ModelConfig ModelConfig::desk() {
  ModelConfig c;
  c.encoder = EncoderConfig::desk();
  c.head.d_in = c.encoder.d_model;
  return c;
}

std::size_t param_count(const ModelConfig& config) {
  return param_count(config.encoder) + param_count(config.head);
}

template <typename T>
Model<T>::Model(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng enc_rng(seed, "init.encoder");
  encoder_ = std::make_unique<Encoder<T>>(cfg_.encoder, enc_rng);
  Rng head_rng(seed, "init.head");
  head_ = std::make_unique<Head<T>>(cfg_.head, head_rng);
}

template <typename T>
BasicTensor<T> Model<T>::forward(const SampleBatch& batch, Mode mode, Rng& rng, bool for_backward) {
  encoder_recorded_ = for_backward && !cfg_.freeze_encoder;
  auto pooled = encoder_->forward(batch, mode, rng, encoder_recorded_);
  return head_->forward(pooled, mode, rng);
}

template <typename T>
void Model<T>::backward(const BasicTensor<T>& d_log_probs) {
  auto d_pooled = head_->backward(d_log_probs);
  if (encoder_recorded_) encoder_->backward(d_pooled);
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::parameters() {
  auto out = encoder_->parameters();
  for (auto* p : head_->parameters()) out.push_back(p);
  return out;
}

template <typename T>
std::vector<Parameter<T>*> Model<T>::trainable_parameters() {
  if (cfg_.freeze_encoder) return head_->parameters();
  return parameters();
}

template <typename T>
std::vector<std::pair<std::string, BasicTensor<T>*>> Model<T>::state_tensors() {
  std::vector<std::pair<std::string, BasicTensor<T>*>> out;
  for (auto* p : parameters()) out.emplace_back(p->name, &p->value);
  for (auto& b : head_->buffers()) out.push_back(b);
  return out;
}

template <typename T>
void Model<T>::zero_grad() {
  for (auto* p : parameters()) p->zero_grad();
}

template <typename T>
void Model<T>::reinit_head(std::uint64_t seed, std::string_view stream) {
  Rng rng(seed, stream);
  head_ = std::make_unique<Head<T>>(cfg_.head, rng);
}

template <typename T>
void Model<T>::copy_encoder_from(Model& other) {
  auto dst = encoder_->parameters();
  auto src = other.encoder_->parameters();
  if (dst.size() != src.size()) throw std::invalid_argument("encoder structures differ");
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->name != src[i]->name || dst[i]->value.shape() != src[i]->value.shape()) {
      throw std::invalid_argument("encoder parameter mismatch at " + dst[i]->name);
    }
    dst[i]->value = src[i]->value;
  }
}

template class Model<float>;
template class Model<double>;

}  // namespace ufnd
