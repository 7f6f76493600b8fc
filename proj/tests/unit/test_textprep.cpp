#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <string>

#include "helpers.hpp"
#include "ufnd/textprep.hpp"

using namespace ufnd;

namespace {

using Tokens = std::vector<std::string>;

Corpus corpus_of(std::initializer_list<const char*> texts) {
  Corpus c;
  c.name = "t";
  for (const char* t : texts) c.docs.push_back({t, 0, "t"});
  return c;
}

PrepConfig no_removal() {
  PrepConfig p;
  p.remove_short = false;
  return p;
}

std::string random_word(Rng& rng, std::size_t len) {
  std::string w;
  for (std::size_t i = 0; i < len; ++i) w += char('a' + rng.below(26));
  return w;
}

}  // namespace

TEST_SUITE("textprep") {

TEST_CASE("normalize examples") {
  PrepConfig p;
  CHECK(normalize("Breaking News: Markets FALL!", p) == Tokens{"breaking", "news", "markets", "fall"});
  CHECK(normalize("", p).empty());
  CHECK(normalize("COVID-19 update", p) == Tokens{"covid", "19", "update"});
  CHECK(normalize("  \t\n ", p).empty());

  PrepConfig keep = p;
  keep.lowercase = false;
  keep.strip_nonalnum = false;
  CHECK(normalize("A-b  C!", keep) == Tokens{"A-b", "C!"});
}

TEST_CASE("remove_short_words examples") {
  CHECK(remove_short_words({"it", "is", "a", "big", "cat"}, 3) == Tokens{"big", "cat"});
  CHECK(remove_short_words({"the", "bus"}, 3) == Tokens{"the", "bus"});
  CHECK(remove_short_words({}, 3).empty());
  CHECK_THROWS(remove_short_words({"x"}, 0));
}

TEST_CASE("remove_short_words is idempotent, order preserving and exact") {
  Rng rng(4, "test");
  for (int trial = 0; trial < 2000; ++trial) {
    Tokens in;
    const std::size_t n = rng.below(30);
    for (std::size_t i = 0; i < n; ++i) in.push_back(random_word(rng, 1 + rng.below(10)));
    const auto out = remove_short_words(in, 3);
    CHECK(remove_short_words(out, 3) == out);
    // Oracle: a direct filter.
    Tokens expect;
    for (const auto& t : in)
      if (t.size() >= 3) expect.push_back(t);
    CHECK(out == expect);
  }
}

TEST_CASE("token length counts code points") {
  CHECK(token_length("abc") == 3);
  CHECK(token_length("\xC3\xA9t\xC3\xA9") == 3);  // "été"
  CHECK(remove_short_words({"\xC3\xA9t\xC3\xA9", "\xC3\xA9t"}, 3) == Tokens{"\xC3\xA9t\xC3\xA9"});
}

TEST_CASE("build_vocab ranking, truncation and ties") {
  auto c = corpus_of({"big cat", "big dog"});
  auto v = build_vocab(c, no_removal(), 10, 1);
  CHECK(v.size() == 3 + 3);
  CHECK(v.id("big") == 3);
  CHECK(v.id("cat") == 4);
  CHECK(v.id("dog") == 5);
  CHECK(v.id("zebra") == Vocabulary::unk_id);

  auto one = build_vocab(c, no_removal(), 1, 1);
  CHECK(one.tokens() == Tokens{"big"});

  auto freq2 = build_vocab(c, no_removal(), 10, 2);
  CHECK(freq2.tokens() == Tokens{"big"});
}

TEST_CASE("build_vocab skips short words and flags empty streams") {
  PrepConfig p;
  auto v = build_vocab(corpus_of({"it is a big cat"}), p, 10);
  CHECK_FALSE(v.contains("it"));
  CHECK(v.contains("big"));

  auto empty = build_vocab(corpus_of({"a b c"}), p, 10);
  CHECK(empty.specials_only());
  CHECK(empty.size() == 3);
}

TEST_CASE("vocabulary serialization is deterministic and round-trips") {
  auto c = corpus_of({"alpha beta gamma", "beta gamma", "gamma delta"});
  auto a = build_vocab(c, no_removal(), 100);
  auto b = build_vocab(c, no_removal(), 100);
  CHECK(a.serialize() == b.serialize());
  CHECK(a.hash() == b.hash());

  auto back = Vocabulary::deserialize(a.serialize());
  CHECK(back.tokens() == a.tokens());
  CHECK(back.hash() == a.hash());
  for (const auto& t : a.tokens()) CHECK(back.id(t) == a.id(t));

  // One token per line after the header; line number = id - 3.
  const auto text = a.serialize();
  const auto first_nl = text.find('\n');
  CHECK(text.substr(first_nl + 1, 6) == "gamma\n");
}

TEST_CASE("encode pads, truncates and maps unknown tokens") {
  auto v = build_vocab(corpus_of({"big cat"}), no_removal(), 10);
  PrepConfig p = no_removal();
  p.max_seq_len = 5;
  auto s = encode({"big cat", 1, "t"}, v, p);
  CHECK(s.ids == std::vector<std::int32_t>{Vocabulary::cls_id, v.id("big"), v.id("cat"), 0, 0});
  CHECK(s.mask == std::vector<std::uint8_t>{1, 1, 1, 0, 0});
  CHECK(s.true_length == 3);
  CHECK(s.label == 1);

  auto longer = encode({"big cat big cat big cat big", 0, "t"}, v, p);
  CHECK(longer.true_length == 5);
  CHECK(longer.ids.size() == 5);

  auto unk = encode({"big wolf", 0, "t"}, v, p);
  CHECK(unk.ids[2] == Vocabulary::unk_id);
}

TEST_CASE("encoded samples satisfy their invariants") {
  Rng rng(12, "test");
  Corpus c;
  for (int i = 0; i < 50; ++i) {
    std::string text;
    const std::size_t n = rng.below(40);
    for (std::size_t j = 0; j < n; ++j) text += random_word(rng, 1 + rng.below(6)) + " ";
    c.docs.push_back({text, int(i % 2), "r"});
  }
  PrepConfig p;
  p.max_seq_len = 12;
  auto v = build_vocab(c, p, 30);
  auto set = encode_corpus(c, v, p);
  for (const auto& s : set.samples) {
    REQUIRE(s.ids.size() == p.max_seq_len);
    REQUIRE(s.mask.size() == p.max_seq_len);
    CHECK(s.ids[0] == Vocabulary::cls_id);
    std::size_t sum = 0;
    for (std::size_t i = 0; i < s.ids.size(); ++i) {
      sum += s.mask[i];
      if (i >= 1) CHECK((s.mask[i] == 0) == (s.ids[i] == Vocabulary::pad_id));
    }
    CHECK(sum == s.true_length);
  }
}

TEST_CASE("encoded sets round-trip through files") {
  testing::TempDir dir("encset");
  auto c = corpus_of({"big cat", "small dog barks", "cat"});
  PrepConfig p = no_removal();
  p.max_seq_len = 4;
  auto v = build_vocab(c, p, 10);
  auto set = encode_corpus(c, v, p);
  set.save(dir.file("s.enc"));
  auto back = EncodedSet::load(dir.file("s.enc"));
  CHECK(back.max_seq_len == 4);
  CHECK(back.vocab_hash == v.hash());
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back.samples[i].ids == set.samples[i].ids);
    CHECK(back.samples[i].mask == set.samples[i].mask);
    CHECK(back.samples[i].true_length == set.samples[i].true_length);
  }
}

TEST_CASE("seq_length_stats examples") {
  PrepConfig p;
  auto one = seq_length_stats(corpus_of({"it is a big cat"}), p);
  CHECK(one.counts_without_removal == std::vector<std::size_t>{5});
  CHECK(one.counts_with_removal == std::vector<std::size_t>{2});

  auto same = seq_length_stats(corpus_of({"the big cat", "dogs bark loudly today"}), p);
  CHECK(same.with_removal.mean == same.without_removal.mean);
  CHECK(same.with_removal.max == same.without_removal.max);
  CHECK(same.with_removal.percentile_95 == same.without_removal.percentile_95);
}

TEST_CASE("seq_length_stats agrees with a brute-force recount") {
  Rng rng(33, "test");
  Corpus c;
  for (int i = 0; i < 300; ++i) {
    std::string text;
    const std::size_t n = rng.below(60);
    for (std::size_t j = 0; j < n; ++j) text += random_word(rng, 1 + rng.below(10)) + (rng.below(5) ? " " : ", ");
    c.docs.push_back({text, 0, "r"});
  }
  PrepConfig p;
  auto st = seq_length_stats(c, p);
  std::size_t max_with = 0, max_without = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    // Recount with a separate tokenizer: split on anything not [a-z0-9].
    std::size_t without = 0, with = 0, run = 0;
    for (char ch : c.docs[i].text + " ") {
      if (std::isalnum(static_cast<unsigned char>(ch))) {
        ++run;
      } else if (run > 0) {
        ++without;
        if (run >= 3) ++with;
        run = 0;
      }
    }
    CHECK(st.counts_without_removal[i] == without);
    CHECK(st.counts_with_removal[i] == with);
    CHECK(with <= without);
    max_with = std::max(max_with, with);
    max_without = std::max(max_without, without);
  }
  CHECK(st.with_removal.max == max_with);
  CHECK(st.without_removal.max == max_without);
  CHECK(st.with_removal.max <= st.without_removal.max);
}

TEST_CASE("nearest-rank 95th percentile") {
  Corpus c;
  for (int n = 1; n <= 20; ++n) {
    std::string t;
    for (int j = 0; j < n; ++j) t += "word ";
    c.docs.push_back({t, 0, "p"});
  }
  auto st = seq_length_stats(c, PrepConfig{});
  // ceil(0.95 * 20) = 19th smallest.
  CHECK(st.without_removal.percentile_95 == 19);
  CHECK(st.without_removal.mean == doctest::Approx(10.5));
}

TEST_CASE("sequence length presets") {
  CHECK(PrepConfig::without_preprocessing().max_seq_len == 200);
  CHECK_FALSE(PrepConfig::without_preprocessing().remove_short);
  CHECK(PrepConfig::with_preprocessing().max_seq_len == 120);
  CHECK(PrepConfig::with_preprocessing().remove_short);
  CHECK(PrepConfig::without_preprocessing_alt().max_seq_len == 300);
  CHECK(PrepConfig::with_preprocessing_alt().max_seq_len == 175);
  PrepConfig bad;
  bad.max_seq_len = 1;
  CHECK_THROWS(bad.validate());
  bad.max_seq_len = 10;
  bad.min_word_len = 0;
  CHECK_THROWS(bad.validate());
}

}  // TEST_SUITE
