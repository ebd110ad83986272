#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "mvocab/corpus.hpp"
#include "mvocab/vocabulary.hpp"

namespace mvocab {

struct TrainerConfig {
  std::size_t target_size = 32000;
  Algorithm algorithm = Algorithm::kUnigram;
  double character_coverage = kDefaultCharacterCoverage;
  std::size_t seed_size = 1000000;
  std::size_t max_piece_length = 16;
  std::size_t em_iterations_per_round = 2;
  double prune_fraction = 0.25;
  long long random_seed = 0;

  void validate() const;
};

// Training input after normalization: the corpus is cut at boundary markers
// and at out-of-alphabet characters into segments, and identical segments are
// merged with a count. Segments keep their leading U+2581, if any.
struct SegmentTable {
  std::vector<char32_t> alphabet;  // ascending, includes U+2581
  std::vector<std::pair<std::u32string, std::uint64_t>> segments;  // sorted
  std::uint64_t oov_chars = 0;

  static SegmentTable build(const LanguageCorpus& corpus, double coverage);
};

// Optional instrumentation of a unigram training run.
struct TrainingTrace {
  struct EmStep {
    std::size_t round = 0;
    std::size_t iteration = 0;  // iteration i reports the NLL before M-step i
    std::size_t vocab_size = 0;
    double nll = 0.0;
  };
  struct PruneRound {
    std::size_t round = 0;
    double nll = 0.0;
    // Every non-special piece with its log-probability when losses were taken.
    std::vector<std::pair<std::string, double>> pieces;
    // NLL increase from dropping each prunable piece, other pieces unchanged.
    std::vector<std::pair<std::string, double>> losses;
    std::vector<std::string> pruned;
  };

  std::vector<EmStep> em_steps;
  std::vector<PruneRound> prune_rounds;
  std::size_t seed_pool_size = 0;
};

// Minimum reachable vocabulary size: alphabet plus UNK.
std::size_t size_floor(const SegmentTable& table);

Vocabulary train_unigram(const LanguageCorpus& corpus, const TrainerConfig& config,
                         TrainingTrace* trace = nullptr);

Vocabulary train_bpe(const LanguageCorpus& corpus, const TrainerConfig& config);

// Dispatches on config.algorithm.
Vocabulary train_vocabulary(const LanguageCorpus& corpus, const TrainerConfig& config);

}  // namespace mvocab
