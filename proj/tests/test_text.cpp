#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <fstream>
#include <string>

#include "doctest.h"
#include "xscript/errors.hpp"
#include "xscript/text.hpp"
#include "xscript/translit.hpp"

using namespace xscript;

namespace {

// Unique temp path per test file; removed by the fixture.
struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/xscript_test_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
  void write(const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
  }
};

}  // namespace

TEST_CASE("labels parse and print") {
  CHECK(parse_label("negative") == Label::negative);
  CHECK(parse_label("neutral") == Label::neutral);
  CHECK(parse_label("positive") == Label::positive);
  CHECK(label_name(Label::positive) == "positive");
  CHECK(label_name(0) == "negative");
  CHECK_THROWS_AS(parse_label("meh"), DataError);
  CHECK_THROWS_AS(label_name(3), DataError);
}

TEST_CASE("word splitting and joining") {
  CHECK(split_words("ramro chha") == std::vector<std::string>{"ramro", "chha"});
  CHECK(split_words("  a  b ") == std::vector<std::string>{"a", "b"});
  CHECK(split_words("") == std::vector<std::string>{});
  CHECK(join_words({"a", "b"}) == "a b");
  CHECK(join_words({}) == "");
}

TEST_CASE("tsv parsing round trip") {
  TempFile f("roundtrip.tsv");
  std::vector<ScriptPairExample> examples = {
      {{"ramro", "chha"}, {"राम्रो", "छ"}, Label::positive},
      {{"tito"}, {"तीतो"}, Label::negative},
  };
  save_examples_tsv(f.path, examples);
  auto loaded = load_examples_tsv(f.path);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].roman_words == examples[0].roman_words);
  CHECK(loaded[0].deva_words == examples[0].deva_words);
  CHECK(loaded[0].label == Label::positive);
  CHECK(loaded[1].label == Label::negative);
}

TEST_CASE("tsv errors carry 1-based line numbers") {
  TempFile f("bad.tsv");
  SUBCASE("wrong field count") {
    f.write("a\tअ\tpositive\nx y\tsecond only\n");
    CHECK_THROWS_WITH_AS(load_examples_tsv(f.path),
                         doctest::Contains(":2: expected 3 tab-separated"),
                         DataError);
  }
  SUBCASE("unknown label") {
    f.write("a\tअ\tgreat\n");
    CHECK_THROWS_WITH_AS(load_examples_tsv(f.path),
                         doctest::Contains(":1: unknown label 'great'"),
                         DataError);
  }
  SUBCASE("unequal word counts") {
    f.write("a b c\tअ ब\tpositive\n");
    CHECK_THROWS_WITH_AS(load_examples_tsv(f.path),
                         doctest::Contains("(3 vs 2)"), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_examples_tsv("/nonexistent/nope.tsv"), DataError);
  }
}

TEST_CASE("empty dataset file parses to an empty list") {
  TempFile f("empty.tsv");
  f.write("");
  CHECK(load_examples_tsv(f.path).empty());
}

TEST_CASE("crlf line endings are tolerated") {
  TempFile f("crlf.tsv");
  f.write("a b\tअ ब\tneutral\r\n");
  auto loaded = load_examples_tsv(f.path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].label == Label::neutral);
}

TEST_CASE("vocabulary respects the frequency threshold") {
  Vocabulary v = Vocabulary::build({{"a", "b"}, {"a"}}, 2);
  CHECK(v.contains("a"));
  CHECK(!v.contains("b"));
  CHECK(v.size() == 4);
  CHECK(v.id_of("b") == Vocabulary::kUnk);
}

TEST_CASE("vocabulary ids are dense and deterministic") {
  // Counts: x3, b2, a2, z1. Ties break by token order.
  std::vector<std::vector<std::string>> corpus = {
      {"x", "b", "a"}, {"x", "a", "b"}, {"x", "z"}};
  Vocabulary v1 = Vocabulary::build(corpus, 1);
  Vocabulary v2 = Vocabulary::build(corpus, 1);
  CHECK(v1.size() == 7);
  CHECK(v1.id_of("x") == 3);
  CHECK(v1.id_of("a") == 4);
  CHECK(v1.id_of("b") == 5);
  CHECK(v1.id_of("z") == 6);
  for (const auto* t : {"x", "a", "b", "z"})
    CHECK(v1.id_of(t) == v2.id_of(t));
  CHECK(v1.token_of(3) == "x");
  CHECK(v1.token_of(Vocabulary::kUnk) == "<unk>");
  CHECK_THROWS_AS(v1.token_of(7), DataError);
  CHECK_THROWS_AS(v1.token_of(-1), DataError);
}

TEST_CASE("vocabulary build rejects bad inputs") {
  CHECK_THROWS_AS(Vocabulary::build({}, 1), DataError);
  CHECK_THROWS_AS(Vocabulary::build({{"a"}}, 0), ConfigError);
}

TEST_CASE("vocabulary survives save and load") {
  Vocabulary v = Vocabulary::build({{"pani", "ramro", "pani"}}, 1);
  TempFile f("vocab.txt");
  v.save(f.path);
  Vocabulary loaded = Vocabulary::load(f.path);
  CHECK(loaded.size() == v.size());
  CHECK(loaded.id_of("pani") == v.id_of("pani"));
  CHECK(loaded.id_of("ramro") == v.id_of("ramro"));
}

TEST_CASE("vocabulary load rejects duplicates") {
  TempFile f("dup_vocab.txt");
  f.write("a\nb\na\n");
  CHECK_THROWS_WITH_AS(Vocabulary::load(f.path), doctest::Contains(":3:"),
                       DataError);
}

TEST_CASE("encoding pads, truncates and masks") {
  Vocabulary v = Vocabulary::build({{"w1", "w2"}}, 1);
  SUBCASE("empty sentence") {
    Encoded e = encode_words({}, v, 5);
    CHECK(e.ids == std::vector<int>{0, 1, 1, 1, 1});
    CHECK(e.mask == std::vector<double>{1, 0, 0, 0, 0});
  }
  SUBCASE("known words") {
    Encoded e = encode_words({"w1", "w2"}, v, 5);
    CHECK(e.ids == std::vector<int>{0, v.id_of("w1"), v.id_of("w2"), 1, 1});
    CHECK(e.mask == std::vector<double>{1, 1, 1, 0, 0});
  }
  SUBCASE("unknown word becomes UNK") {
    Encoded e = encode_words({"zzz"}, v, 3);
    CHECK(e.ids[1] == Vocabulary::kUnk);
    CHECK(e.mask[1] == 1.0);
  }
  SUBCASE("long sentence truncates from the tail") {
    std::vector<std::string> words(150, "w1");
    Encoded e = encode_words(words, v, 100);
    CHECK(e.ids.size() == 100);
    CHECK(e.ids[0] == Vocabulary::kCls);
    for (int i = 1; i < 100; ++i) CHECK(e.ids[i] == v.id_of("w1"));
    for (int i = 0; i < 100; ++i) CHECK(e.mask[i] == 1.0);
  }
  SUBCASE("bad max_len") {
    CHECK_THROWS_AS(encode_words({}, v, 0), ConfigError);
  }
}

TEST_CASE("decode inverts encode up to truncation and specials") {
  Vocabulary v = Vocabulary::build({{"ramro", "chha", "pani"}}, 1);
  Encoded e = encode_words({"ramro", "zzz", "pani"}, v, 8);
  CHECK(decode_ids(e.ids, v) ==
        std::vector<std::string>{"ramro", "<unk>", "pani"});
}

TEST_CASE("batching stacks examples row by row") {
  std::vector<ScriptPairExample> data = {
      {{"a", "b"}, {"अ", "ब"}, Label::positive},
      {{"b"}, {"ब"}, Label::negative},
  };
  auto [rv, dv] = build_vocabs(data, 1);
  Batch b = make_batch(data, rv, dv, 4);
  CHECK(b.size == 2);
  CHECK(b.max_len == 4);
  CHECK(b.roman_ids.size() == 8);
  CHECK(b.labels == std::vector<int>{2, 0});
  CHECK(b.roman_ids[0] == Vocabulary::kCls);
  CHECK(b.roman_ids[4] == Vocabulary::kCls);
  CHECK(b.roman_mask == std::vector<double>{1, 1, 1, 0, 1, 1, 0, 0});
  CHECK(b.deva_mask == b.roman_mask);
  CHECK_THROWS_AS(make_batch(data, {5}, rv, dv, 4), DataError);
}

TEST_CASE("transliteration is deterministic and total") {
  CHECK(toy_transliterate("") == "");
  CHECK(toy_transliterate("ramro") == toy_transliterate("ramro"));
  // Unknown characters pass through unchanged.
  CHECK(toy_transliterate("a-b") ==
        toy_transliterate("a") + "-" + toy_transliterate("b"));
}

TEST_CASE("transliteration prefers the longest match") {
  // "chh" must win over "ch"+"h" and over "c"+"h"+"h".
  CHECK(toy_transliterate("chha") ==
        std::string("छ") + "अ");
  CHECK(toy_transliterate("cha") == std::string("च") + "अ");
  CHECK(toy_transliterate("ca") == std::string("ट") + "अ");
  // "aa" wins over "a"+"a".
  CHECK(toy_transliterate("aa") == "आ");
  CHECK(toy_transliterate("aaa") == std::string("आ") + "अ");
}

TEST_CASE("shipped transliteration table matches the builtin") {
  auto from_file =
      TableTransliterator::from_tsv(std::string(XSCRIPT_DATA_DIR) +
                                    "/translit_table.tsv");
  CHECK(from_file.entries() == TableTransliterator::builtin().entries());
}

TEST_CASE("transliteration table file errors") {
  TempFile f("translit_bad.tsv");
  SUBCASE("wrong field count") {
    f.write("a\n");
    CHECK_THROWS_WITH_AS(TableTransliterator::from_tsv(f.path),
                         doctest::Contains(":1:"), DataError);
  }
  SUBCASE("duplicate key") {
    f.write("a\tx\na\ty\n");
    CHECK_THROWS_AS(TableTransliterator::from_tsv(f.path), DataError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(TableTransliterator::from_tsv("/nonexistent/t.tsv"),
                    DataError);
  }
}
