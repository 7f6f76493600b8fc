#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

#include "ufnd/model.hpp"
#include "ufnd/textprep.hpp"
#include "ufnd/train_config.hpp"

namespace ufnd {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Flat key=value configuration. '#' starts a comment line; keys are unique;
// serialization is sorted by key, so equal configs serialize identically.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text, const std::string& origin = "<string>");
  static KvConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void erase(const std::string& key) { entries_.erase(key); }
  const std::string& get(const std::string& key) const;
  std::string get_or(const std::string& key, const std::string& fallback) const;
  std::size_t get_size(const std::string& key, std::size_t fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  // on/off, true/false, 1/0, yes/no
  bool get_bool(const std::string& key, bool fallback) const;

  // Overlays every entry of `other` onto this config.
  void merge(const KvConfig& other);
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string serialize() const;
  // 16 hex digits of FNV-1a over serialize().
  std::string hash_hex() const;

 private:
  std::map<std::string, std::string> entries_;
};

bool parse_bool(const std::string& value);
std::string format_double(double v);
std::string hex64(std::uint64_t v);

void write_config(KvConfig& kv, const ModelConfig& model);
void write_config(KvConfig& kv, const TrainConfig& train);
void write_config(KvConfig& kv, const PrepConfig& prep);

// Missing keys keep the values in `defaults`.
ModelConfig read_model_config(const KvConfig& kv, ModelConfig defaults = ModelConfig::desk());
TrainConfig read_train_config(const KvConfig& kv, TrainConfig defaults = {});
PrepConfig read_prep_config(const KvConfig& kv, PrepConfig defaults = {});

}  // namespace ufnd
