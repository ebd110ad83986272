#include <algorithm>
#include <unordered_map>

#include "mvocab/error.hpp"
#include "mvocab/trainer.hpp"
#include "mvocab/utf8.hpp"

namespace mvocab {

void TrainerConfig::validate() const {
  if (target_size == 0) throw_usage("target_size must be positive");
  if (!(character_coverage > 0.0 && character_coverage <= 1.0)) {
    throw_usage("character_coverage must be in (0, 1]");
  }
  if (seed_size == 0) throw_usage("seed_size must be positive");
  if (max_piece_length < 1) throw_usage("max_piece_length must be positive");
  if (em_iterations_per_round == 0) throw_usage("em_iterations_per_round must be positive");
  if (!(prune_fraction > 0.0 && prune_fraction < 1.0)) {
    throw_usage("prune_fraction must be in (0, 1)");
  }
}

SegmentTable SegmentTable::build(const LanguageCorpus& corpus, double coverage) {
  if (corpus.empty()) throw_training("cannot train on an empty corpus");

  std::vector<std::u32string> sentences;
  sentences.reserve(corpus.sentence_count());
  CharCounts counts;
  for (const auto& raw : corpus.sentences()) {
    std::u32string s = utf8::decode(normalize(raw));
    for (char32_t cp : s) {
      if (cp != utf8::kBoundary) ++counts[cp];
    }
    sentences.push_back(std::move(s));
  }
  if (counts.empty()) throw_training("corpus has no characters");

  SegmentTable table;
  table.alphabet = coverage_alphabet(counts, coverage);
  const auto in_alphabet = [&](char32_t cp) {
    return std::binary_search(table.alphabet.begin(), table.alphabet.end(), cp);
  };

  std::unordered_map<std::u32string, std::uint64_t> tally;
  for (const auto& s : sentences) {
    std::size_t start = 0;
    auto flush = [&](std::size_t end) {
      if (end > start) ++tally[s.substr(start, end - start)];
    };
    for (std::size_t i = 0; i < s.size(); ++i) {
      const char32_t cp = s[i];
      if (cp == utf8::kBoundary) {
        flush(i);
        start = i;
      } else if (!in_alphabet(cp)) {
        flush(i);
        ++table.oov_chars;
        start = i + 1;
      }
    }
    flush(s.size());
  }
  table.segments.assign(tally.begin(), tally.end());
  std::sort(table.segments.begin(), table.segments.end());
  return table;
}

std::size_t size_floor(const SegmentTable& table) { return table.alphabet.size() + 1; }

Vocabulary train_vocabulary(const LanguageCorpus& corpus, const TrainerConfig& config) {
  return config.algorithm == Algorithm::kBpe ? train_bpe(corpus, config)
                                             : train_unigram(corpus, config);
}

}  // namespace mvocab
