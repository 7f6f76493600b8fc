#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ufnd/corpus.hpp"
#include "ufnd/kv_config.hpp"
#include "ufnd/model.hpp"
#include "ufnd/textprep.hpp"
#include "ufnd/train_config.hpp"

namespace ufnd::cli {

// Bad paths, schemas or config values. Exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
// A checkpoint that does not fit the data or config it is used with. Exit code 3.
class IncompatibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Values of the shared flags; unset ones leave the config file alone.
struct Overrides {
  std::vector<std::string> configs;  // merged in order, later files win
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> batch_size;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> max_seq_len;
  std::optional<std::string> preprocess;
  std::optional<std::string> blocks;
  std::optional<std::string> freeze_encoder;
  std::optional<double> threshold;
};

// Config file (if any) with flag overrides applied and every default filled
// in, so the persisted copy fully determines the run.
struct Resolved {
  KvConfig kv;
  // Relative dataset paths resolve against the directory of the last config
  // file that defines 'datasets'.
  std::string base_dir;
  ModelConfig model;
  TrainConfig train;
  PrepConfig prep;
};

Resolved resolve(const Overrides& o);

struct DatasetSpec {
  std::string name;
  std::vector<std::string> paths;
  std::vector<std::optional<int>> fixed_labels;  // parallel to paths
  std::string test_path;                         // predefined test split, optional
  ColumnMap columns;
};

std::vector<DatasetSpec> dataset_specs(const Resolved& r);

struct LoadedDataset {
  std::string name;
  SplitCorpus split;
  std::vector<LoadReport> reports;
  std::vector<std::string> inputs;
};

std::vector<LoadedDataset> load_datasets(const Resolved& r);

std::vector<std::size_t> parse_size_list(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);
std::string size_list(const std::vector<std::size_t>& v);

class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv);

  void set_config(const KvConfig& kv);
  void input(const std::string& path);
  void output(const std::string& path);
  void note(const std::string& key, const std::string& value);
  void timing(const std::string& key, double seconds);
  void write(const std::string& out_dir);

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::string started_;
  KvConfig config_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  std::vector<std::string> outputs_;
  std::map<std::string, std::string> notes_;
  std::map<std::string, double> timings_;
};

void ensure_dir(const std::string& dir);
std::string join_path(const std::string& dir, const std::string& file);
void write_text(const std::string& path, const std::string& text, Manifest& m);
std::string file_digest(const std::string& path);

}  // namespace ufnd::cli
