#include "ufnd/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "ufnd/delimited.hpp"
#include "ufnd/rng.hpp"

namespace ufnd {

std::string LoadReport::to_text() const {
  std::ostringstream os;
  os << "dataset=" << name << '\n'
     << "path=" << path << '\n'
     << "rows_read=" << rows_read << '\n'
     << "rows_dropped_empty=" << rows_dropped_empty << '\n'
     << "documents=" << (rows_read - rows_dropped_empty) << '\n'
     << "label_0_real=" << label_histogram[0] << '\n'
     << "label_1_fake=" << label_histogram[1] << '\n';
  return os.str();
}

namespace {

bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

LoadResult load_dataset(const std::string& path, const ColumnMap& columns,
                        const std::string& name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CorpusError("cannot open dataset file: " + path);
  if (columns.text_columns.empty()) throw SchemaError("no text columns configured for " + path);

  DelimitedReader reader(in, columns.delimiter);
  std::vector<std::string> header;
  if (!reader.next(header)) throw EmptyCorpusError("dataset file is empty: " + path);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  auto column_index = [&](const std::string& col) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == col) return i;
    }
    throw SchemaError("missing column '" + col + "' in " + path);
  };
  std::vector<std::size_t> text_idx;
  for (const auto& col : columns.text_columns) text_idx.push_back(column_index(col));
  std::optional<std::size_t> label_idx;
  if (!columns.fixed_label) {
    if (columns.label_column.empty()) {
      throw SchemaError("no label column or fixed label configured for " + path);
    }
    label_idx = column_index(columns.label_column);
  } else if (*columns.fixed_label != kLabelReal && *columns.fixed_label != kLabelFake) {
    throw DataError("fixed label must be 0 or 1 for " + path);
  }

  LoadResult result;
  result.corpus.name = name;
  result.report.name = name;
  result.report.path = path;

  std::vector<std::string> row;
  std::size_t row_number = 0;  // 1-based data row, header excluded
  while (reader.next(row)) {
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    ++row_number;
    ++result.report.rows_read;

    const auto need = std::max(label_idx.value_or(0), *std::max_element(text_idx.begin(), text_idx.end()));
    if (row.size() <= need) {
      throw DataError("row " + std::to_string(row_number) + " (line " +
                      std::to_string(reader.record_line()) + ") of " + path + " has " +
                      std::to_string(row.size()) + " fields, expected at least " +
                      std::to_string(need + 1));
    }

    int label;
    if (columns.fixed_label) {
      label = *columns.fixed_label;
    } else {
      const std::string raw = trim(row[*label_idx]);
      auto it = columns.label_mapping.find(raw);
      if (it == columns.label_mapping.end()) {
        throw DataError("unmappable label '" + raw + "' at row " + std::to_string(row_number) +
                        " of " + path);
      }
      label = it->second;
      if (label != kLabelReal && label != kLabelFake) {
        throw DataError("label mapping for '" + raw + "' is not 0 or 1");
      }
    }

    std::string text;
    for (std::size_t k = 0; k < text_idx.size(); ++k) {
      if (k) text.push_back(' ');
      text += row[text_idx[k]];
    }
    if (is_blank(text)) {
      ++result.report.rows_dropped_empty;
      continue;
    }
    ++result.report.label_histogram[static_cast<std::size_t>(label)];
    result.corpus.docs.push_back({std::move(text), label, name});
  }

  if (result.report.rows_read == 0) throw EmptyCorpusError("dataset file has no data rows: " + path);
  return result;
}

SplitCorpus split(const Corpus& corpus, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw std::invalid_argument("split ratio must lie in (0, 1)");
  }
  const std::size_t n = corpus.size();
  if (n < 2) throw DegenerateSplitError("cannot split a corpus of " + std::to_string(n) + " documents");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed, "split");
  for (std::size_t i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i + 1));
    std::swap(order[i], order[j]);
  }

  const auto n_train = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  SplitCorpus out;
  out.ratio = ratio;
  out.seed = seed;
  out.train.name = corpus.name + ".train";
  out.test.name = corpus.name + ".test";
  out.train_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test_indices.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  for (auto i : out.train_indices) out.train.docs.push_back(corpus.docs[i]);
  for (auto i : out.test_indices) out.test.docs.push_back(corpus.docs[i]);
  return out;
}

Corpus combine(std::span<const Corpus> corpora, std::string name) {
  if (corpora.empty()) throw std::invalid_argument("combine needs at least one corpus");
  if (corpora.size() == 1) return corpora[0];
  Corpus out;
  out.name = std::move(name);
  std::size_t total = 0;
  for (const auto& c : corpora) total += c.size();
  out.docs.reserve(total);
  for (const auto& c : corpora) out.docs.insert(out.docs.end(), c.docs.begin(), c.docs.end());
  return out;
}

SplitCorpus combine_splits(std::span<const SplitCorpus> splits, std::string name) {
  if (splits.empty()) throw std::invalid_argument("combine_splits needs at least one split");
  std::vector<Corpus> trains, tests;
  SplitCorpus out;
  out.ratio = splits[0].ratio;
  out.seed = splits[0].seed;
  std::size_t offset = 0;
  for (const auto& s : splits) {
    trains.push_back(s.train);
    tests.push_back(s.test);
    for (auto i : s.train_indices) out.train_indices.push_back(offset + i);
    for (auto i : s.test_indices) out.test_indices.push_back(offset + i);
    offset += s.train.size() + s.test.size();
  }
  out.train = combine(trains, name + ".train");
  out.test = combine(tests, name + ".test");
  out.train.name = name + ".train";
  out.test.name = name + ".test";
  return out;
}

}  // namespace ufnd
