#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "mvocab/error.hpp"
#include "mvocab/trainer.hpp"
#include "mvocab/utf8.hpp"
#include "oracles.hpp"

using namespace mvocab;

namespace {

LanguageCorpus repeat(const std::string& sentence, std::size_t n) {
  return LanguageCorpus("xx", std::vector<std::string>(n, sentence));
}

TrainerConfig config_for(std::size_t target, Algorithm algorithm = Algorithm::kUnigram) {
  TrainerConfig c;
  c.target_size = target;
  c.algorithm = algorithm;
  c.character_coverage = 1.0;
  return c;
}

std::set<std::string> learned(const Vocabulary& v) {
  std::set<std::string> out;
  for (const auto& p : v.pieces()) {
    if (p.kind == PieceKind::kLearned) out.insert(p.text);
  }
  return out;
}

std::vector<std::u32string> alphabet_pieces(const SegmentTable& t) {
  std::vector<std::u32string> out;
  for (char32_t c : t.alphabet) out.emplace_back(1, c);
  return out;
}

// Random sentences over a tiny alphabet, so segments stay short enough for
// exhaustive enumeration.
LanguageCorpus random_corpus(std::mt19937_64& rng, std::size_t sentences) {
  const std::string letters = "abcd";
  std::vector<std::string> out;
  for (std::size_t s = 0; s < sentences; ++s) {
    std::string line;
    const std::size_t words = 1 + rng() % 3;
    for (std::size_t w = 0; w < words; ++w) {
      if (w) line += ' ';
      const std::size_t len = 1 + rng() % 4;
      for (std::size_t i = 0; i < len; ++i) line += letters[rng() % (1 + rng() % letters.size())];
    }
    out.push_back(line);
  }
  return LanguageCorpus("xx", std::move(out));
}

}  // namespace

TEST_SUITE("vocab_training") {

TEST_CASE("single repeated sentence learns the whole sentence") {
  const auto corpus = repeat("abc", 100);
  // alphabet {▁,a,b,c} + UNK + 1 learned piece
  const auto v = train_unigram(corpus, config_for(6));
  CHECK(v.size() == 6);
  CHECK(learned(v) == std::set<std::string>{"▁abc"});

  // Oracle: maximum likelihood of alphabet + each candidate piece.
  const auto table = SegmentTable::build(corpus, 1.0);
  const std::u32string s = U"▁abc";
  double best_nll = INFINITY;
  std::u32string best;
  for (std::size_t i = 0; i < s.size(); ++i) {
    for (std::size_t len = 2; i + len <= s.size(); ++len) {
      auto pieces = alphabet_pieces(table);
      pieces.push_back(s.substr(i, len));
      const double nll = oracle::corpus_nll(oracle::fit_em(pieces, table.segments), table.segments);
      if (nll < best_nll - 1e-9) best_nll = nll, best = s.substr(i, len);
    }
  }
  CHECK(best == s);
}

TEST_CASE("no room for learned pieces leaves the alphabet with MLE scores") {
  const auto v = train_unigram(repeat("ab", 1), config_for(4));
  REQUIRE(v.size() == 4);
  CHECK(learned(v).empty());
  for (const auto& p : v.pieces()) {
    if (p.kind == PieceKind::kCharacter) CHECK(p.score == doctest::Approx(std::log(1.0 / 3)).epsilon(1e-6));
  }
}

TEST_CASE("two learned pieces beat every other pair from the seed pool") {
  const auto corpus = repeat("xy xy", 50);
  const auto v = train_unigram(corpus, config_for(4 + 2));
  const auto kept = learned(v);
  REQUIRE(kept.size() == 2);
  CHECK(kept.count("▁xy") == 1);

  const auto table = SegmentTable::build(corpus, 1.0);
  const std::vector<std::u32string> pool{U"▁x", U"xy", U"▁xy"};
  auto fitted_nll = [&](const std::vector<std::u32string>& extra) {
    auto pieces = alphabet_pieces(table);
    pieces.insert(pieces.end(), extra.begin(), extra.end());
    return oracle::corpus_nll(oracle::fit_em(pieces, table.segments), table.segments);
  };
  std::vector<std::u32string> kept32;
  for (const auto& k : kept) kept32.push_back(utf8::decode(k));
  const double ours = fitted_nll(kept32);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      CHECK(ours <= fitted_nll({pool[i], pool[j]}) + 1e-6);
    }
  }
}

TEST_CASE("BPE first merge follows pair frequency") {
  const LanguageCorpus corpus("xx", {"aa", "aa", "ab"});
  // pairs: (▁,a) x3, (a,a) x2, (a,b) x1
  const auto v = train_bpe(corpus, config_for(3 + 1 + 1, Algorithm::kBpe));
  CHECK(learned(v) == std::set<std::string>{"▁a"});
  CHECK(v.pieces()[*v.find("▁a")].score == 0.0);
}

TEST_CASE("BPE with no merges allowed is the alphabet") {
  const auto v = train_bpe(repeat("b", 10), config_for(3, Algorithm::kBpe));
  CHECK(v.size() == 3);
  CHECK(learned(v).empty());
}

TEST_CASE("BPE performs exactly the requested number of merges") {
  std::mt19937_64 rng(5);
  const auto corpus = random_corpus(rng, 200);
  const auto floor = size_floor(SegmentTable::build(corpus, 1.0));
  for (std::size_t k : {0, 1, 5, 12}) {
    const auto v = train_bpe(corpus, config_for(floor + k, Algorithm::kBpe));
    CHECK(learned(v).size() == k);
    std::set<double> ranks;
    for (const auto& p : v.pieces()) {
      if (p.kind == PieceKind::kLearned) ranks.insert(p.score);
    }
    CHECK(ranks.size() == k);
  }
}

TEST_CASE("unigram vocabulary invariants on random corpora") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const auto corpus = random_corpus(rng, 30 + rng() % 50);
    const auto table = SegmentTable::build(corpus, 1.0);
    const std::size_t target = size_floor(table) + 1 + rng() % 10;
    const auto v = train_unigram(corpus, config_for(target));
    CHECK(v.size() <= target);
    double mass = 0.0;
    std::size_t unk = 0;
    for (const auto& p : v.pieces()) {
      if (p.kind == PieceKind::kSpecial) {
        ++unk;
        continue;
      }
      CHECK(p.score <= 0.0);
      mass += std::exp(p.score);
    }
    CHECK(unk == 1);
    CHECK(std::fabs(mass - 1.0) < 1e-6 * static_cast<double>(v.size()));
    for (char32_t c : table.alphabet) CHECK(v.contains(utf8::encode(c)));
  }
}

TEST_CASE("training is deterministic") {
  std::mt19937_64 rng(23);
  const auto corpus = random_corpus(rng, 80);
  const auto target = size_floor(SegmentTable::build(corpus, 1.0)) + 8;
  CHECK(train_unigram(corpus, config_for(target)).serialize() ==
        train_unigram(corpus, config_for(target)).serialize());
  CHECK(train_bpe(corpus, config_for(target, Algorithm::kBpe)).serialize() ==
        train_bpe(corpus, config_for(target, Algorithm::kBpe)).serialize());
}

TEST_CASE("unreachable targets and empty corpora are errors") {
  CHECK_THROWS_AS(train_unigram(repeat("abc", 3), config_for(3)), Error);
  CHECK_THROWS_AS(train_unigram(LanguageCorpus("xx", {}), config_for(10)), Error);
  auto bad = config_for(10);
  bad.prune_fraction = 1.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("EM never increases the corpus NLL within a round") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    const auto corpus = random_corpus(rng, 40);
    auto config = config_for(size_floor(SegmentTable::build(corpus, 1.0)) + 3);
    config.em_iterations_per_round = 4;
    TrainingTrace trace;
    train_unigram(corpus, config, &trace);
    for (std::size_t i = 1; i < trace.em_steps.size(); ++i) {
      const auto& prev = trace.em_steps[i - 1];
      const auto& cur = trace.em_steps[i];
      if (prev.round != cur.round) continue;
      CHECK(cur.nll <= prev.nll + 1e-9 * std::fabs(prev.nll));
    }
  }
}

TEST_CASE("pruning drops the pieces whose removal costs least") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const auto corpus = random_corpus(rng, 25);
    const auto table = SegmentTable::build(corpus, 1.0);
    auto config = config_for(size_floor(table) + 2);
    config.seed_size = 20;
    TrainingTrace trace;
    train_unigram(corpus, config, &trace);
    REQUIRE(!trace.prune_rounds.empty());
    for (const auto& round : trace.prune_rounds) {
      std::map<std::u32string, double> logp;
      for (const auto& [text, lp] : round.pieces) logp[utf8::decode(text)] = lp;
      const double base = oracle::corpus_nll(logp, table.segments);
      CHECK(base == doctest::Approx(round.nll).epsilon(1e-9));
      std::map<std::string, double> loss;
      for (const auto& [text, lp] : round.pieces) {
        if (utf8::codepoint_count(text) == 1) continue;
        auto without = logp;
        without.erase(utf8::decode(text));
        loss[text] = oracle::corpus_nll(without, table.segments) - base;
      }
      double worst_pruned = -INFINITY;
      for (const auto& p : round.pruned) worst_pruned = std::max(worst_pruned, loss[p]);
      for (const auto& [text, l] : loss) {
        if (std::find(round.pruned.begin(), round.pruned.end(), text) != round.pruned.end()) continue;
        CHECK(worst_pruned <= l + 1e-9 * (1.0 + std::fabs(base)));
      }
    }
  }
}

}  // TEST_SUITE
