#include "ufnd/textprep.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "ufnd/rng.hpp"

namespace ufnd {

void PrepConfig::validate() const {
  if (min_word_len < 1) throw std::invalid_argument("min_word_len must be >= 1");
  if (max_seq_len < 2) throw std::invalid_argument("max_seq_len must be >= 2");
}

std::uint64_t PrepConfig::token_hash() const {
  std::ostringstream os;
  os << "min_word_len=" << min_word_len << ";lowercase=" << lowercase
     << ";strip_nonalnum=" << strip_nonalnum << ";remove_short=" << remove_short;
  return fnv1a64(os.str());
}

PrepConfig PrepConfig::without_preprocessing() {
  PrepConfig c;
  c.max_seq_len = 200;
  c.remove_short = false;
  return c;
}

PrepConfig PrepConfig::with_preprocessing() {
  PrepConfig c;
  c.max_seq_len = 120;
  c.remove_short = true;
  return c;
}

PrepConfig PrepConfig::without_preprocessing_alt() {
  auto c = without_preprocessing();
  c.max_seq_len = 300;
  return c;
}

PrepConfig PrepConfig::with_preprocessing_alt() {
  auto c = with_preprocessing();
  c.max_seq_len = 175;
  return c;
}

namespace {

bool is_ascii_alnum(unsigned char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

}  // namespace

std::vector<std::string> normalize(std::string_view text, const PrepConfig& cfg) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (unsigned char c : text) {
    // Bytes >= 0x80 belong to multi-byte UTF-8 sequences and are kept intact.
    const bool separator = is_ascii_space(c) || (cfg.strip_nonalnum && c < 0x80 && !is_ascii_alnum(c));
    if (separator) {
      flush();
      continue;
    }
    if (cfg.lowercase && c >= 'A' && c <= 'Z') c = static_cast<unsigned char>(c - 'A' + 'a');
    current.push_back(static_cast<char>(c));
  }
  flush();
  return tokens;
}

std::size_t token_length(std::string_view token) {
  std::size_t n = 0;
  for (unsigned char c : token) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::vector<std::string> remove_short_words(const std::vector<std::string>& tokens,
                                            std::size_t min_word_len) {
  if (min_word_len < 1) throw std::invalid_argument("min_word_len must be >= 1");
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) {
    if (token_length(t) >= min_word_len) out.push_back(t);
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text, const PrepConfig& cfg) {
  auto tokens = normalize(text, cfg);
  if (cfg.remove_short) tokens = remove_short_words(tokens, cfg.min_word_len);
  return tokens;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::uint64_t config_hash,
                       std::size_t max_size, std::size_t min_freq)
    : tokens_(std::move(tokens)), config_hash_(config_hash), max_size_(max_size), min_freq_(min_freq) {
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    const auto [it, inserted] =
        index_.emplace(tokens_[i], static_cast<std::int32_t>(i) + special_count);
    if (!inserted) throw std::invalid_argument("duplicate vocabulary token '" + tokens_[i] + "'");
    if (tokens_[i].empty() || tokens_[i].find_first_of(" \t\r\n") != std::string::npos) {
      throw std::invalid_argument("vocabulary tokens must be non-empty and contain no whitespace");
    }
  }
}

std::int32_t Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? unk_id : it->second;
}

const std::string& Vocabulary::token(std::int32_t id) const {
  static const std::string specials[special_count] = {"[PAD]", "[UNK]", "[CLS]"};
  if (id < 0 || static_cast<std::size_t>(id) >= size()) {
    throw std::out_of_range("token id " + std::to_string(id) + " out of range");
  }
  if (id < special_count) return specials[id];
  return tokens_[static_cast<std::size_t>(id - special_count)];
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.count(std::string(token)) != 0;
}

std::uint64_t Vocabulary::hash() const { return fnv1a64(serialize()); }

std::string Vocabulary::serialize() const {
  std::ostringstream os;
  os << "# ufnd-vocab v1 config=" << std::hex << config_hash_ << std::dec
     << " max_size=" << max_size_ << " min_freq=" << min_freq_ << " tokens=" << tokens_.size()
     << '\n';
  for (const auto& t : tokens_) os << t << '\n';
  return os.str();
}

Vocabulary Vocabulary::deserialize(const std::string& text) {
  std::istringstream is(text);
  std::string header;
  if (!std::getline(is, header) || header.rfind("# ufnd-vocab v1 ", 0) != 0) {
    throw std::runtime_error("not a vocabulary file (bad header)");
  }
  std::uint64_t config_hash = 0;
  std::size_t max_size = 0, min_freq = 1, count = 0;
  std::istringstream hs(header.substr(16));
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const auto key = kv.substr(0, eq);
    const auto val = kv.substr(eq + 1);
    if (key == "config") config_hash = std::stoull(val, nullptr, 16);
    else if (key == "max_size") max_size = std::stoull(val);
    else if (key == "min_freq") min_freq = std::stoull(val);
    else if (key == "tokens") count = std::stoull(val);
  }
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(is, line)) tokens.push_back(line);
  if (tokens.size() != count) {
    throw std::runtime_error("vocabulary file lists " + std::to_string(tokens.size()) +
                             " tokens, header says " + std::to_string(count));
  }
  return Vocabulary(std::move(tokens), config_hash, max_size, min_freq);
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write vocabulary: " + path);
  out << serialize();
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open vocabulary: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

Vocabulary build_vocab(const Corpus& corpus, const PrepConfig& cfg, std::size_t max_size,
                       std::size_t min_freq) {
  cfg.validate();
  if (corpus.empty()) throw EmptyCorpusError("cannot build a vocabulary from an empty corpus");
  std::map<std::string, std::size_t> freq;
  for (const auto& doc : corpus.docs) {
    for (auto& t : tokenize(doc.text, cfg)) ++freq[std::move(t)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : freq) {
    if (n >= min_freq) ranked.emplace_back(tok, n);
  }
  // std::map iteration is already token-ascending; stable_sort keeps that
  // order among equal frequencies.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > max_size) ranked.resize(max_size);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [tok, n] : ranked) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens), cfg.token_hash(), max_size, min_freq);
}

EncodedSample encode(const Document& doc, const Vocabulary& vocab, const PrepConfig& cfg) {
  cfg.validate();
  EncodedSample s;
  s.label = doc.label;
  s.ids.assign(cfg.max_seq_len, Vocabulary::pad_id);
  s.mask.assign(cfg.max_seq_len, 0);
  s.ids[0] = Vocabulary::cls_id;
  s.mask[0] = 1;
  std::size_t pos = 1;
  for (const auto& t : tokenize(doc.text, cfg)) {
    if (pos >= cfg.max_seq_len) break;
    s.ids[pos] = vocab.id(t);
    s.mask[pos] = 1;
    ++pos;
  }
  s.true_length = pos;
  return s;
}

EncodedSet encode_corpus(const Corpus& corpus, const Vocabulary& vocab, const PrepConfig& cfg) {
  EncodedSet set;
  set.name = corpus.name;
  set.max_seq_len = cfg.max_seq_len;
  set.vocab_hash = vocab.hash();
  set.samples.reserve(corpus.size());
  for (const auto& d : corpus.docs) set.samples.push_back(encode(d, vocab, cfg));
  return set;
}

double EncodedSet::mean_true_length() const {
  if (samples.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : samples) total += static_cast<double>(s.true_length);
  return total / static_cast<double>(samples.size());
}

void EncodedSet::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write encoded corpus: " + path);
  out << "# ufnd-encoded v1 name=" << name << " max_seq_len=" << max_seq_len << " vocab="
      << std::hex << vocab_hash << std::dec << " samples=" << samples.size() << '\n';
  for (const auto& s : samples) {
    out << s.label << '\t';
    for (std::size_t i = 0; i < s.true_length; ++i) {
      if (i) out << ' ';
      out << s.ids[i];
    }
    out << '\n';
  }
}

EncodedSet EncodedSet::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open encoded corpus: " + path);
  std::string header;
  if (!std::getline(in, header) || header.rfind("# ufnd-encoded v1 ", 0) != 0) {
    throw std::runtime_error("not an encoded corpus file: " + path);
  }
  EncodedSet set;
  std::size_t count = 0;
  std::istringstream hs(header.substr(18));
  std::string kv;
  while (hs >> kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const auto key = kv.substr(0, eq);
    const auto val = kv.substr(eq + 1);
    if (key == "name") set.name = val;
    else if (key == "max_seq_len") set.max_seq_len = std::stoull(val);
    else if (key == "vocab") set.vocab_hash = std::stoull(val, nullptr, 16);
    else if (key == "samples") count = std::stoull(val);
  }
  if (set.max_seq_len < 2) throw std::runtime_error("encoded corpus has invalid max_seq_len: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw std::runtime_error("malformed encoded sample in " + path);
    EncodedSample s;
    s.label = std::stoi(line.substr(0, tab));
    if (s.label != kLabelReal && s.label != kLabelFake) {
      throw std::runtime_error("invalid label in encoded corpus " + path);
    }
    s.ids.assign(set.max_seq_len, Vocabulary::pad_id);
    s.mask.assign(set.max_seq_len, 0);
    std::istringstream ids(line.substr(tab + 1));
    std::int32_t id;
    std::size_t pos = 0;
    while (ids >> id) {
      if (pos >= set.max_seq_len) throw std::runtime_error("encoded sample too long in " + path);
      s.ids[pos] = id;
      s.mask[pos] = 1;
      ++pos;
    }
    if (pos == 0 || s.ids[0] != Vocabulary::cls_id) {
      throw std::runtime_error("encoded sample does not start with CLS in " + path);
    }
    s.true_length = pos;
    set.samples.push_back(std::move(s));
  }
  if (set.samples.size() != count) {
    throw std::runtime_error("encoded corpus " + path + " is truncated: expected " +
                             std::to_string(count) + " samples, found " +
                             std::to_string(set.samples.size()));
  }
  return set;
}

namespace {

LengthSummary summarize(std::vector<std::size_t> counts) {
  LengthSummary s;
  if (counts.empty()) return s;
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  s.mean = total / static_cast<double>(counts.size());
  std::sort(counts.begin(), counts.end());
  s.max = counts.back();
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(counts.size())));
  s.percentile_95 = counts[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

}  // namespace

SeqLengthStats seq_length_stats(const Corpus& corpus, const PrepConfig& cfg) {
  cfg.validate();
  if (corpus.empty()) throw EmptyCorpusError("seq_length_stats on an empty corpus");
  SeqLengthStats st;
  for (const auto& doc : corpus.docs) {
    const auto tokens = normalize(doc.text, cfg);
    st.counts_without_removal.push_back(tokens.size());
    st.counts_with_removal.push_back(remove_short_words(tokens, cfg.min_word_len).size());
  }
  st.with_removal = summarize(st.counts_with_removal);
  st.without_removal = summarize(st.counts_without_removal);
  return st;
}

std::string SeqLengthStats::to_text() const {
  std::ostringstream os;
  os << "documents=" << counts_with_removal.size() << '\n'
     << "without_removal.mean=" << without_removal.mean << '\n'
     << "without_removal.max=" << without_removal.max << '\n'
     << "without_removal.p95=" << without_removal.percentile_95 << '\n'
     << "with_removal.mean=" << with_removal.mean << '\n'
     << "with_removal.max=" << with_removal.max << '\n'
     << "with_removal.p95=" << with_removal.percentile_95 << '\n';
  return os.str();
}

}  // namespace ufnd
