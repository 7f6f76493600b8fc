#include "ufnd/kv_config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "ufnd/rng.hpp"

namespace ufnd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text, const std::string& origin) {
  KvConfig kv;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const auto key = trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (kv.has(key)) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    kv.set(key, trim(t.substr(eq + 1)));
  }
  return kv;
}

KvConfig KvConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

const std::string& KvConfig::get(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError("missing config key '" + key + "'");
  return it->second;
}

std::string KvConfig::get_or(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::size_t KvConfig::get_size(const std::string& key, std::size_t fallback) const {
  return static_cast<std::size_t>(get_u64(key, fallback));
}

std::uint64_t KvConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::uint64_t v = 0;
  const auto& s = it->second;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + s + "'");
  }
  return v;
}

double KvConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + it->second + "'");
  }
}

bool parse_bool(const std::string& v) {
  if (v == "on" || v == "true" || v == "1" || v == "yes") return true;
  if (v == "off" || v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("expected on/off, got '" + v + "'");
}

bool KvConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  try {
    return parse_bool(it->second);
  } catch (const ConfigError&) {
    throw ConfigError("config key '" + key + "' expects on/off, got '" + it->second + "'");
  }
}

void KvConfig::merge(const KvConfig& other) {
  for (const auto& [k, v] : other.entries_) entries_[k] = v;
}

std::string KvConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
  return out;
}

std::string KvConfig::hash_hex() const { return hex64(fnv1a64(serialize())); }

std::string format_double(double v) {
  // Shortest representation that round-trips.
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, p);
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_config(KvConfig& kv, const ModelConfig& m) {
  const auto& e = m.encoder;
  kv.set("model.vocab_size", std::to_string(e.vocab_size));
  kv.set("model.d_model", std::to_string(e.d_model));
  kv.set("model.n_heads", std::to_string(e.n_heads));
  kv.set("model.d_ff", std::to_string(e.d_ff));
  kv.set("model.n_blocks_total", std::to_string(e.n_blocks_total));
  kv.set("model.blocks", e.block_subset.empty() ? "all" : subset_label(e.block_subset));
  kv.set("model.max_seq_len", std::to_string(e.max_seq_len));
  kv.set("model.encoder_dropout", format_double(e.dropout_rate));
  kv.set("model.ln_eps", format_double(e.ln_eps));
  const auto& h = m.head;
  kv.set("head.h1", std::to_string(h.h1));
  kv.set("head.h2", std::to_string(h.h2));
  kv.set("head.n_classes", std::to_string(h.n_classes));
  kv.set("head.dropout", format_double(h.dropout_rate));
  kv.set("head.bn_momentum", format_double(h.bn_momentum));
  kv.set("head.bn_eps", format_double(h.bn_eps));
  kv.set("model.freeze_encoder", m.freeze_encoder ? "on" : "off");
}

void write_config(KvConfig& kv, const TrainConfig& t) {
  kv.set("train.lr", format_double(t.lr));
  kv.set("train.clip", format_double(t.clip));
  kv.set("train.epochs", std::to_string(t.epochs));
  kv.set("train.batch_size", std::to_string(t.batch_size));
  kv.set("train.dropout", format_double(t.dropout_rate));
  kv.set("train.seed", std::to_string(t.seed));
  kv.set("train.freeze_encoder", t.freeze_encoder ? "on" : "off");
  kv.set("train.max_seq_len", std::to_string(t.max_seq_len));
  kv.set("train.preprocess", t.preprocessing_enabled ? "on" : "off");
  kv.set("train.best_policy", to_string(t.best_policy));
  kv.set("train.checked", t.checked ? "on" : "off");
  kv.set("train.adam_beta1", format_double(t.beta1));
  kv.set("train.adam_beta2", format_double(t.beta2));
  kv.set("train.adam_eps", format_double(t.adam_eps));
}

void write_config(KvConfig& kv, const PrepConfig& p) {
  kv.set("prep.min_word_len", std::to_string(p.min_word_len));
  kv.set("prep.max_seq_len", std::to_string(p.max_seq_len));
  kv.set("prep.lowercase", p.lowercase ? "on" : "off");
  kv.set("prep.strip_nonalnum", p.strip_nonalnum ? "on" : "off");
  kv.set("prep.remove_short", p.remove_short ? "on" : "off");
}

ModelConfig read_model_config(const KvConfig& kv, ModelConfig m) {
  auto& e = m.encoder;
  e.vocab_size = kv.get_size("model.vocab_size", e.vocab_size);
  e.d_model = kv.get_size("model.d_model", e.d_model);
  e.n_heads = kv.get_size("model.n_heads", e.n_heads);
  e.d_ff = kv.get_size("model.d_ff", e.d_ff);
  e.n_blocks_total = kv.get_size("model.n_blocks_total", e.n_blocks_total);
  if (kv.has("model.blocks")) {
    const auto& b = kv.get("model.blocks");
    e.block_subset = b == "all" ? std::vector<std::size_t>{} : parse_subset(b);
  }
  e.max_seq_len = kv.get_size("model.max_seq_len", e.max_seq_len);
  e.dropout_rate = kv.get_double("model.encoder_dropout", e.dropout_rate);
  e.ln_eps = kv.get_double("model.ln_eps", e.ln_eps);
  auto& h = m.head;
  h.d_in = e.d_model;
  h.h1 = kv.get_size("head.h1", h.h1);
  h.h2 = kv.get_size("head.h2", h.h2);
  h.n_classes = kv.get_size("head.n_classes", h.n_classes);
  h.dropout_rate = kv.get_double("head.dropout", h.dropout_rate);
  h.bn_momentum = kv.get_double("head.bn_momentum", h.bn_momentum);
  h.bn_eps = kv.get_double("head.bn_eps", h.bn_eps);
  m.freeze_encoder = kv.get_bool("model.freeze_encoder", m.freeze_encoder);
  return m;
}

TrainConfig read_train_config(const KvConfig& kv, TrainConfig t) {
  t.lr = kv.get_double("train.lr", t.lr);
  t.clip = kv.get_double("train.clip", t.clip);
  t.epochs = kv.get_size("train.epochs", t.epochs);
  t.batch_size = kv.get_size("train.batch_size", t.batch_size);
  t.dropout_rate = kv.get_double("train.dropout", t.dropout_rate);
  t.seed = kv.get_u64("train.seed", t.seed);
  t.freeze_encoder = kv.get_bool("train.freeze_encoder", t.freeze_encoder);
  t.max_seq_len = kv.get_size("train.max_seq_len", t.max_seq_len);
  t.preprocessing_enabled = kv.get_bool("train.preprocess", t.preprocessing_enabled);
  if (kv.has("train.best_policy")) t.best_policy = parse_best_policy(kv.get("train.best_policy"));
  t.checked = kv.get_bool("train.checked", t.checked);
  t.beta1 = kv.get_double("train.adam_beta1", t.beta1);
  t.beta2 = kv.get_double("train.adam_beta2", t.beta2);
  t.adam_eps = kv.get_double("train.adam_eps", t.adam_eps);
  return t;
}

PrepConfig read_prep_config(const KvConfig& kv, PrepConfig p) {
  p.min_word_len = kv.get_size("prep.min_word_len", p.min_word_len);
  p.max_seq_len = kv.get_size("prep.max_seq_len", p.max_seq_len);
  p.lowercase = kv.get_bool("prep.lowercase", p.lowercase);
  p.strip_nonalnum = kv.get_bool("prep.strip_nonalnum", p.strip_nonalnum);
  p.remove_short = kv.get_bool("prep.remove_short", p.remove_short);
  return p;
}

}  // namespace ufnd
