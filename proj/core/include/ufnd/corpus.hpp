#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ufnd {

inline constexpr int kLabelReal = 0;
inline constexpr int kLabelFake = 1;

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
// A mapped column is missing from the header row.
class SchemaError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};
// A row cannot be converted into a Document.
class DataError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};
class EmptyCorpusError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};
class DegenerateSplitError : public CorpusError {
 public:
  using CorpusError::CorpusError;
};

struct Document {
  std::string text;
  int label = kLabelReal;  // 0 = real, 1 = fake
  std::string source;

  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::string name;
  std::vector<Document> docs;

  std::size_t size() const { return docs.size(); }
  bool empty() const { return docs.empty(); }
};

struct SplitCorpus {
  Corpus train;
  Corpus test;
  double ratio = 0.8;
  std::uint64_t seed = 0;
  // Positions in the original corpus, in split order.
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

struct ColumnMap {
  std::vector<std::string> text_columns;
  std::string label_column;
  std::map<std::string, int> label_mapping;
  // Files that hold a single class (one file per class) use a fixed label
  // instead of a label column.
  std::optional<int> fixed_label;
  char delimiter = ',';
};

struct LoadReport {
  std::string name;
  std::string path;
  std::size_t rows_read = 0;
  std::size_t rows_dropped_empty = 0;
  std::array<std::size_t, 2> label_histogram{0, 0};

  std::string to_text() const;
};

struct LoadResult {
  Corpus corpus;
  LoadReport report;
};

// Every document produced carries `name` as its source tag.
LoadResult load_dataset(const std::string& path, const ColumnMap& columns,
                        const std::string& name);

// Deterministic shuffle keyed only by `seed`, then the first
// floor(ratio * n) documents go to train.
SplitCorpus split(const Corpus& corpus, double ratio, std::uint64_t seed);

Corpus combine(std::span<const Corpus> corpora, std::string name = "combined");

// Combines per-dataset splits part-wise so no test document of any input
// lands in the combined train part.
SplitCorpus combine_splits(std::span<const SplitCorpus> splits, std::string name = "combined");

}  // namespace ufnd
