#include "helpers.hpp"

#include <fstream>
#include <sstream>

#include "ufnd/synthetic.hpp"

namespace testing {

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ufnd::EncodedSample make_sample(std::size_t len, std::size_t max_len, std::size_t vocab,
                                ufnd::Rng& rng, int label) {
  ufnd::EncodedSample s;
  s.ids.assign(max_len, ufnd::Vocabulary::pad_id);
  s.mask.assign(max_len, 0);
  s.ids[0] = ufnd::Vocabulary::cls_id;
  s.mask[0] = 1;
  for (std::size_t i = 1; i < len && i < max_len; ++i) {
    s.ids[i] = static_cast<std::int32_t>(3 + rng.below(vocab - 3));
    s.mask[i] = 1;
  }
  s.true_length = std::min(len, max_len);
  s.label = label;
  return s;
}

ToyData make_toy(std::size_t docs, double p_fake, double p_real, std::uint64_t seed,
                 std::size_t max_len) {
  ufnd::SyntheticSpec spec;
  spec.docs = docs;
  spec.p_marked_fake = p_fake;
  spec.p_marked_real = p_real;
  auto corpus = ufnd::make_synthetic("toy", spec, seed);
  auto sp = ufnd::split(corpus, 0.8, seed);
  ufnd::PrepConfig prep;
  prep.max_seq_len = max_len;
  ToyData d;
  d.vocab = ufnd::build_vocab(sp.train, prep, 1000);
  d.train = ufnd::encode_corpus(sp.train, d.vocab, prep);
  d.val = ufnd::encode_corpus(sp.test, d.vocab, prep);
  return d;
}

ufnd::ModelConfig toy_model(std::size_t vocab_size, std::size_t max_len) {
  auto m = ufnd::ModelConfig::tiny();
  m.encoder.vocab_size = vocab_size;
  m.encoder.max_seq_len = max_len;
  m.freeze_encoder = false;
  return m;
}

ufnd::TrainConfig toy_train(std::size_t epochs, std::size_t batch_size, std::size_t max_len) {
  ufnd::TrainConfig t;
  t.epochs = epochs;
  t.batch_size = batch_size;
  t.freeze_encoder = false;
  t.max_seq_len = max_len;
  t.seed = 1;
  return t;
}

}  // namespace testing
