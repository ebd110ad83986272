#include <cmath>
#include <random>

#include "doctest.h"
#include "mvocab/corpus.hpp"
#include "mvocab/error.hpp"
#include "mvocab/utf8.hpp"
#include "support.hpp"

using namespace mvocab;

TEST_SUITE("corpus") {

TEST_CASE("normalize maps whitespace runs to one boundary marker") {
  CHECK(normalize("hello world") == "▁hello▁world");
  CHECK(normalize("  a \t b  ") == "▁a▁b");
  CHECK(normalize("   ") == "");
  CHECK(normalize("") == "");
}

TEST_CASE("normalize applies NFKC") {
  // fullwidth letters and the fi ligature fold to ASCII
  CHECK(normalize("ＡＢ") == "▁AB");
  CHECK(normalize("\xef\xac\x81le") == "▁file");
}

TEST_CASE("normalize is idempotent and denormalize inverts it") {
  std::mt19937_64 rng(3);
  const std::u32string alphabet = U"ab c\tdé  ж中ﬁ";
  for (int trial = 0; trial < 500; ++trial) {
    std::u32string raw;
    const std::size_t n = rng() % 12;
    for (std::size_t i = 0; i < n; ++i) raw += alphabet[rng() % alphabet.size()];
    const std::string once = normalize(utf8::encode(std::u32string_view(raw)));
    CHECK(normalize(denormalize(once)) == once);
    CHECK(normalize(once) == normalize(denormalize(once)));
  }
  CHECK(denormalize("▁hello▁world") == "hello world");
}

TEST_CASE("sampling distribution matches the closed form") {
  const auto d = sampling_distribution({{"a", 100}, {"b", 900}}, 0.5);
  const double wa = std::sqrt(0.1);
  const double wb = std::sqrt(0.9);
  CHECK(d.weight("a") == doctest::Approx(wa / (wa + wb)).epsilon(1e-14));
  CHECK(d.weight("b") == doctest::Approx(wb / (wa + wb)).epsilon(1e-14));
  CHECK(d.weight("zz") == 0.0);

  const auto flat = sampling_distribution({{"a", 1}, {"b", 3}}, 1.0);
  CHECK(flat.weight("a") == doctest::Approx(0.25));

  CHECK_THROWS_AS(sampling_distribution({{"a", 1}}, 0.0), Error);
  CHECK_THROWS_AS(sampling_distribution({{"a", 0}}, 0.7), Error);
}

TEST_CASE("smoothing never decreases the smallest language's share") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::pair<std::string, std::size_t>> sizes;
    const std::size_t n = 2 + rng() % 6;
    for (std::size_t i = 0; i < n; ++i) sizes.emplace_back("l" + std::to_string(i), 1 + rng() % 10000);
    const auto raw = sampling_distribution(sizes, 1.0);
    const auto smooth = sampling_distribution(sizes, 0.3);
    double total = 0.0;
    std::string smallest = sizes.front().first;
    std::size_t smallest_n = sizes.front().second;
    for (const auto& [l, s] : sizes) {
      total += smooth.weight(l);
      if (s < smallest_n) smallest = l, smallest_n = s;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(smooth.weight(smallest) >= raw.weight(smallest) - 1e-15);
  }
}

TEST_CASE("coverage alphabet keeps the frequent prefix plus the boundary") {
  CharCounts counts{{U'a', 90}, {U'b', 9}, {U'c', 1}};
  CHECK(coverage_alphabet(counts, 1.0) == std::vector<char32_t>{U'a', U'b', U'c', U'▁'});
  CHECK(coverage_alphabet(counts, 0.99) == std::vector<char32_t>{U'a', U'b', U'▁'});
  CHECK(coverage_alphabet(counts, 0.5) == std::vector<char32_t>{U'a', U'▁'});
  // frequency ties resolve by code point
  CharCounts tied{{U'y', 5}, {U'x', 5}};
  CHECK(coverage_alphabet(tied, 0.5) == std::vector<char32_t>{U'x', U'▁'});
  CHECK_THROWS_AS(coverage_alphabet(counts, 0.0), Error);
}

TEST_CASE("load_corpus drops blank lines and strips CR") {
  testing::TempDir dir;
  testing::write_text(dir / "x.txt", "one\r\n\n   \ntwo ▁ three\n");
  const auto c = load_corpus(dir / "x.txt", "xx");
  REQUIRE(c.sentence_count() == 2);
  CHECK(c.sentences()[0] == "one");
  CHECK(c.sentences()[1] == "two   three");
  CHECK(load_corpus(dir / "x.txt", "xx", 1).sentence_count() == 1);
}

TEST_CASE("load_corpus reports invalid UTF-8 with its line") {
  testing::TempDir dir;
  testing::write_text(dir / "bad.txt", "fine\nbro\xffken\n");
  try {
    load_corpus(dir / "bad.txt", "xx");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
    CHECK(std::string(e.what()).find("bad.txt:2") != std::string::npos);
  }
  CHECK_THROWS_AS(load_corpus(dir / "missing.txt", "xx"), Error);
}

TEST_CASE("manifest round trip and relative paths") {
  testing::TempDir dir;
  testing::write_text(dir / "m.txt", "# languages\nen en.txt\nde sub/de.txt 5  # capped\n");
  const auto entries = load_manifest(dir / "m.txt");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].language == "en");
  CHECK(entries[0].path == dir / "en.txt");
  CHECK(entries[1].max_sentences == 5u);

  write_manifest(dir / "m2.txt", entries);
  const auto again = load_manifest(dir / "m2.txt");
  REQUIRE(again.size() == 2);
  CHECK(again[1].path == entries[1].path);
  CHECK(again[1].max_sentences == 5u);

  testing::write_text(dir / "dup.txt", "en a.txt\nen b.txt\n");
  CHECK_THROWS_AS(load_manifest(dir / "dup.txt"), Error);
  testing::write_text(dir / "cap.txt", "en a.txt five\n");
  CHECK_THROWS_AS(load_manifest(dir / "cap.txt"), Error);
}

TEST_CASE("pool_corpora concatenates in order") {
  const std::vector<LanguageCorpus> cs{{"a", {"x", "y"}}, {"b", {"z"}}};
  const auto pooled = pool_corpora(cs, "ab");
  CHECK(pooled.language() == "ab");
  CHECK(pooled.sentences() == std::vector<std::string>{"x", "y", "z"});
}

}  // TEST_SUITE
