#include <doctest.h>

#include <algorithm>
#include <set>

#include "helpers.hpp"
#include "ufnd/corpus.hpp"

using namespace ufnd;

namespace {

ColumnMap news_columns() {
  ColumnMap c;
  c.text_columns = {"title", "text"};
  c.label_column = "label";
  c.label_mapping = {{"REAL", 0}, {"FAKE", 1}};
  return c;
}

Corpus numbered(std::size_t n, const std::string& source = "s") {
  Corpus c;
  c.name = source;
  for (std::size_t i = 0; i < n; ++i) c.docs.push_back({"doc " + std::to_string(i), int(i % 2), source});
  return c;
}

}  // namespace

TEST_SUITE("corpus") {

TEST_CASE("load three rows with concatenated title and text") {
  testing::TempDir dir("corpus");
  const auto path = dir.file("news.csv");
  testing::write_file(path,
                      "title,text,label\n"
                      "Storm hits,\"Heavy rain, wind\",REAL\n"
                      "Aliens,\"landed in \"\"town\"\"\",FAKE\n"
                      "Vote,\"multi\nline body\",FAKE\n");
  auto r = load_dataset(path, news_columns(), "d1");
  REQUIRE(r.corpus.size() == 3);
  CHECK(r.corpus.docs[0].text == "Storm hits Heavy rain, wind");
  CHECK(r.corpus.docs[0].label == 0);
  CHECK(r.corpus.docs[1].text == "Aliens landed in \"town\"");
  CHECK(r.corpus.docs[1].label == 1);
  CHECK(r.corpus.docs[2].text == "Vote multi\nline body");
  for (const auto& d : r.corpus.docs) CHECK(d.source == "d1");
  CHECK(r.report.rows_read == 3);
  CHECK(r.report.label_histogram[0] == 1);
  CHECK(r.report.label_histogram[1] == 2);

  auto again = load_dataset(path, news_columns(), "d1");
  CHECK(again.corpus.docs == r.corpus.docs);
}

TEST_CASE("load errors") {
  testing::TempDir dir("corpus_err");
  const auto missing = dir.file("missing.csv");
  testing::write_file(missing, "title,text,verdict\na,b,REAL\n");
  try {
    load_dataset(missing, news_columns(), "x");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(std::string(e.what()).find("'label'") != std::string::npos);
  }

  const auto badlabel = dir.file("badlabel.csv");
  testing::write_file(badlabel, "title,text,label\na,b,REAL\nc,d,MAYBE\n");
  try {
    load_dataset(badlabel, news_columns(), "x");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }

  const auto empty = dir.file("empty.csv");
  testing::write_file(empty, "");
  CHECK_THROWS_AS(load_dataset(empty, news_columns(), "x"), EmptyCorpusError);

  const auto header_only = dir.file("header.csv");
  testing::write_file(header_only, "title,text,label\n");
  CHECK_THROWS_AS(load_dataset(header_only, news_columns(), "x"), EmptyCorpusError);
}

TEST_CASE("rows with empty text are dropped and counted") {
  testing::TempDir dir("corpus_drop");
  const auto path = dir.file("d.csv");
  testing::write_file(path, "title,text,label\n,,REAL\nsome,thing,FAKE\n ,  ,FAKE\n");
  auto r = load_dataset(path, news_columns(), "d");
  CHECK(r.corpus.size() == 1);
  CHECK(r.report.rows_read == 3);
  CHECK(r.report.rows_dropped_empty == 2);
  CHECK(r.report.rows_read == r.corpus.size() + r.report.rows_dropped_empty);
}

TEST_CASE("fixed label files and tab delimiter") {
  testing::TempDir dir("corpus_fixed");
  const auto path = dir.file("true.tsv");
  testing::write_file(path, "title\ttext\nA\tone\nB\ttwo\n");
  ColumnMap c;
  c.text_columns = {"title", "text"};
  c.fixed_label = 0;
  c.delimiter = '\t';
  auto r = load_dataset(path, c, "isot");
  REQUIRE(r.corpus.size() == 2);
  CHECK(r.corpus.docs[1].text == "B two");
  CHECK(r.corpus.docs[1].label == 0);
}

TEST_CASE("split sizes follow floor arithmetic") {
  auto s = split(numbered(10), 0.8, 7);
  CHECK(s.train.size() == 8);
  CHECK(s.test.size() == 2);
  auto t = split(numbered(5), 0.8, 7);
  CHECK(t.train.size() == 4);
  CHECK(t.test.size() == 1);
}

TEST_CASE("split is deterministic and a partition") {
  auto c = numbered(37);
  auto a = split(c, 0.8, 99);
  auto b = split(c, 0.8, 99);
  CHECK(a.train_indices == b.train_indices);
  CHECK(a.test_indices == b.test_indices);
  CHECK(a.train.docs == b.train.docs);

  std::set<std::size_t> all(a.train_indices.begin(), a.train_indices.end());
  for (auto i : a.test_indices) CHECK(all.insert(i).second);
  CHECK(all.size() == c.size());
  for (std::size_t i = 0; i < a.train.size(); ++i) CHECK(a.train.docs[i] == c.docs[a.train_indices[i]]);

  auto other = split(c, 0.8, 100);
  CHECK(other.train_indices != a.train_indices);
}

TEST_CASE("split rejects tiny corpora and bad ratios") {
  CHECK_THROWS_AS(split(numbered(1), 0.8, 1), DegenerateSplitError);
  CHECK_THROWS(split(numbered(10), 1.0, 1));
  CHECK_THROWS(split(numbered(10), 0.0, 1));
}

TEST_CASE("combine concatenates and keeps sources") {
  std::vector<Corpus> parts{numbered(3, "a"), numbered(2, "b")};
  auto c = combine(parts);
  REQUIRE(c.size() == 5);
  CHECK(c.docs[0].source == "a");
  CHECK(c.docs[4].source == "b");

  std::vector<Corpus> one{numbered(4, "solo")};
  CHECK(combine(one).docs == one[0].docs);

  std::vector<Corpus> none;
  CHECK_THROWS_AS(combine(none), std::invalid_argument);

  std::vector<Corpus> abc{numbered(3), numbered(4), numbered(5)};
  std::vector<Corpus> ab{abc[0], abc[1]};
  std::vector<Corpus> bc{abc[1], abc[2]};
  std::vector<Corpus> left{combine(ab), abc[2]};
  std::vector<Corpus> right{abc[0], combine(bc)};
  CHECK(combine(left).size() == combine(right).size());
}

TEST_CASE("combined size of the three paper datasets") {
  // 21,417 real + 23,481 fake; 20,386 train + 5,126 test; 3,352.
  const std::size_t isot = 21417 + 23481;
  const std::size_t second = 20386 + 5126;
  CHECK(isot == 44898);
  CHECK(second == 25512);
  std::vector<Corpus> parts(3);
  parts[0].docs.resize(isot);
  parts[1].docs.resize(second);
  parts[2].docs.resize(3352);
  CHECK(combine(parts).size() == 73762);
}

TEST_CASE("combine_splits keeps test documents out of train") {
  std::vector<SplitCorpus> splits{split(numbered(10, "a"), 0.8, 1), split(numbered(6, "b"), 0.5, 1)};
  auto c = combine_splits(splits);
  CHECK(c.train.size() == 8 + 3);
  CHECK(c.test.size() == 2 + 3);
  for (const auto& d : c.test.docs) {
    CHECK(std::find(c.train.docs.begin(), c.train.docs.end(), d) == c.train.docs.end());
  }
}

}  // TEST_SUITE
