#include <random>

#include "doctest.h"
#include "mvocab/error.hpp"
#include "mvocab/run_config.hpp"
#include "support.hpp"

using namespace mvocab;

TEST_SUITE("run_config") {

TEST_CASE("defaults") {
  const RunConfig c;
  CHECK(c.k == 8);
  CHECK(c.per_language_size == 32000);
  CHECK(c.algorithm == Algorithm::kUnigram);
  CHECK(c.character_coverage == 0.9995);
  CHECK(c.smoothing_exponent == 0.7);
  CHECK(!c.total_size);
}

TEST_CASE("serialize and parse round trip") {
  std::mt19937_64 rng(79);
  for (int trial = 0; trial < 100; ++trial) {
    RunConfig c;
    c.manifest = "m" + std::to_string(rng() % 100) + ".txt";
    c.k = 1 + rng() % 10;
    if (rng() % 2) c.total_size = c.k + rng() % 100000;
    c.per_language_size = 1 + rng() % 50000;
    c.algorithm = rng() % 2 ? Algorithm::kBpe : Algorithm::kUnigram;
    c.character_coverage = 0.5 + 0.5 * static_cast<double>(rng() % 1000 + 1) / 1000.0;
    c.smoothing_exponent = static_cast<double>(rng() % 1000 + 1) / 1000.0 * 0.999 + 1e-3;
    c.seed = static_cast<long long>(rng() % 1000) - 500;
    if (rng() % 2) c.target_final_size = 1 + rng() % 1000;
    if (rng() % 2) c.cluster_sentences = 1 + rng() % 1000;
    c.prune_fraction = 0.1 + 0.3 * static_cast<double>(rng() % 100) / 100.0;
    CHECK(RunConfig::parse(c.serialize()) == c);
  }
}

TEST_CASE("every schema key is readable and writable") {
  RunConfig c;
  for (const auto& key : RunConfig::schema()) {
    const std::string value = c.get(key.name);
    c.set(key.name, value);
    CHECK(c.get(key.name) == value);
  }
  CHECK_THROWS_AS(c.get("nope"), Error);
}

TEST_CASE("parse reports bad lines") {
  CHECK(RunConfig::parse("# comment\nk = 3\n\ntotal_size = 100\n").k == 3);
  auto expect_error = [](const std::string& text, const std::string& needle) {
    try {
      RunConfig::parse(text);
      FAIL("expected an error for: " << text);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUsage);
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, e.what());
    }
  };
  expect_error("k = 3\nk = 4\n", "line 2");
  expect_error("colour = red\n", "colour");
  expect_error("k = three\n", "three");
  expect_error("k = 0\n", "k");
  expect_error("just words\n", "line 1");
}

TEST_CASE("save and load") {
  testing::TempDir dir;
  RunConfig c;
  c.manifest = "x/manifest.txt";
  c.total_size = 5000;
  c.save(dir / "run.cfg");
  CHECK(RunConfig::load(dir / "run.cfg") == c);
  CHECK_THROWS_AS(RunConfig::load(dir / "missing.cfg"), Error);
}

TEST_CASE("trainer settings carry over") {
  RunConfig c;
  c.algorithm = Algorithm::kBpe;
  c.max_piece_length = 9;
  const auto t = c.trainer(123);
  CHECK(t.target_size == 123);
  CHECK(t.algorithm == Algorithm::kBpe);
  CHECK(t.max_piece_length == 9);
  CHECK(t.random_seed == 0);
}

}  // TEST_SUITE
