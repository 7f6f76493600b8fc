#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ufnd/corpus.hpp"

namespace ufnd {

struct PrepConfig {
  std::size_t min_word_len = 3;
  std::size_t max_seq_len = 120;
  bool lowercase = true;
  bool strip_nonalnum = true;
  // Drop tokens shorter than min_word_len before vocabulary building and
  // encoding.
  bool remove_short = true;

  void validate() const;
  // Hash of the fields that shape the token stream (max_seq_len excluded).
  std::uint64_t token_hash() const;

  // Sequence-length presets: 200 without short-word removal, 120 with it.
  static PrepConfig without_preprocessing();
  static PrepConfig with_preprocessing();
  // Alternate pairing 300 -> 175.
  static PrepConfig without_preprocessing_alt();
  static PrepConfig with_preprocessing_alt();

  bool operator==(const PrepConfig&) const = default;
};

std::vector<std::string> normalize(std::string_view text, const PrepConfig& cfg);

// Length is counted in UTF-8 code points.
std::size_t token_length(std::string_view token);

std::vector<std::string> remove_short_words(const std::vector<std::string>& tokens,
                                            std::size_t min_word_len);

// normalize, then remove_short_words when cfg.remove_short is set.
std::vector<std::string> tokenize(std::string_view text, const PrepConfig& cfg);

class Vocabulary {
 public:
  static constexpr std::int32_t pad_id = 0;
  static constexpr std::int32_t unk_id = 1;
  static constexpr std::int32_t cls_id = 2;
  static constexpr std::int32_t special_count = 3;

  Vocabulary() = default;
  Vocabulary(std::vector<std::string> tokens, std::uint64_t config_hash, std::size_t max_size,
             std::size_t min_freq);

  // UNK for out-of-vocabulary tokens.
  std::int32_t id(std::string_view token) const;
  const std::string& token(std::int32_t id) const;
  bool contains(std::string_view token) const;

  // Including the three specials.
  std::size_t size() const { return tokens_.size() + special_count; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  bool specials_only() const { return tokens_.empty(); }
  std::uint64_t config_hash() const { return config_hash_; }
  std::size_t max_size() const { return max_size_; }
  std::size_t min_freq() const { return min_freq_; }
  // Hash over the serialized form; identifies a vocabulary in checkpoints.
  std::uint64_t hash() const;

  std::string serialize() const;
  static Vocabulary deserialize(const std::string& text);
  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  std::uint64_t config_hash_ = 0;
  std::size_t max_size_ = 0;
  std::size_t min_freq_ = 1;
};

// Ranks tokens by (frequency desc, token asc) and keeps the top max_size with
// frequency >= min_freq.
Vocabulary build_vocab(const Corpus& corpus, const PrepConfig& cfg, std::size_t max_size,
                       std::size_t min_freq = 1);

struct EncodedSample {
  std::vector<std::int32_t> ids;
  std::vector<std::uint8_t> mask;
  int label = kLabelReal;
  std::size_t true_length = 0;
};

EncodedSample encode(const Document& doc, const Vocabulary& vocab, const PrepConfig& cfg);

struct EncodedSet {
  std::string name;
  std::size_t max_seq_len = 0;
  std::uint64_t vocab_hash = 0;
  std::vector<EncodedSample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double mean_true_length() const;

  // Text format: one header line, then "label<TAB>id id ..." per sample with
  // only the unpadded prefix stored.
  void save(const std::string& path) const;
  static EncodedSet load(const std::string& path);
};

EncodedSet encode_corpus(const Corpus& corpus, const Vocabulary& vocab, const PrepConfig& cfg);

struct LengthSummary {
  double mean = 0.0;
  std::size_t max = 0;
  std::size_t percentile_95 = 0;  // nearest-rank
};

struct SeqLengthStats {
  LengthSummary with_removal;
  LengthSummary without_removal;
  // Pre-truncation token counts per document, CLS excluded.
  std::vector<std::size_t> counts_with_removal;
  std::vector<std::size_t> counts_without_removal;

  std::string to_text() const;
};

SeqLengthStats seq_length_stats(const Corpus& corpus, const PrepConfig& cfg);

}  // namespace ufnd
