#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include "mvocab/error.hpp"
#include "mvocab/trainer.hpp"
#include "mvocab/utf8.hpp"

namespace mvocab {

namespace {

using SymbolId = std::int32_t;
using PairKey = std::uint64_t;

PairKey pair_key(SymbolId left, SymbolId right) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(left)) << 32) |
         static_cast<std::uint32_t>(right);
}
SymbolId left_of(PairKey key) { return static_cast<SymbolId>(key >> 32); }
SymbolId right_of(PairKey key) { return static_cast<SymbolId>(key & 0xFFFFFFFFu); }

class BpeTrainer {
 public:
  BpeTrainer(const SegmentTable& table, const TrainerConfig& config)
      : table_(table), config_(config) {}

  Vocabulary run() {
    for (char32_t cp : table_.alphabet) intern(std::u32string(1, cp));
    for (std::size_t w = 0; w < table_.segments.size(); ++w) {
      const auto& [segment, count] = table_.segments[w];
      std::vector<SymbolId> symbols;
      symbols.reserve(segment.size());
      for (char32_t cp : segment) symbols.push_back(intern(std::u32string(1, cp)));
      words_.push_back(std::move(symbols));
      counts_.push_back(static_cast<std::int64_t>(count));
      add_word(w, +1);
    }

    std::vector<Piece> pieces;
    for (char32_t cp : table_.alphabet) {
      pieces.push_back(Piece{utf8::encode(cp), kBpeBaseScore, PieceKind::kCharacter});
    }
    std::set<SymbolId> learned;
    std::size_t size = pieces.size() + 1;
    while (size < config_.target_size) {
      const auto best = best_pair();
      if (!best) break;
      const SymbolId merged = intern(text_[left_of(*best)] + text_[right_of(*best)]);
      apply_merge(*best, merged);
      if (merged >= static_cast<SymbolId>(table_.alphabet.size()) &&
          learned.insert(merged).second) {
        pieces.push_back(Piece{utf8::encode(text_[merged]),
                               static_cast<double>(learned.size() - 1),
                               PieceKind::kLearned});
        ++size;
      }
    }
    return Vocabulary(Algorithm::kBpe, std::move(pieces),
                      Vocabulary::Metadata{config_.character_coverage, config_.random_seed});
  }

 private:
  SymbolId intern(const std::u32string& text) {
    auto [it, inserted] = ids_.emplace(text, static_cast<SymbolId>(text_.size()));
    if (inserted) {
      text_.push_back(text);
      symbol_freq_.push_back(0);
    }
    return it->second;
  }

  void add_word(std::size_t w, std::int64_t sign) {
    const auto& symbols = words_[w];
    const std::int64_t c = sign * counts_[w];
    for (std::size_t i = 0; i < symbols.size(); ++i) {
      symbol_freq_[symbols[i]] += c;
      if (i + 1 < symbols.size()) {
        const PairKey key = pair_key(symbols[i], symbols[i + 1]);
        auto& n = pair_count_[key];
        n += c;
        if (n == 0) pair_count_.erase(key);
        if (sign > 0) pair_words_[key].push_back(w);
      }
    }
  }

  // Most frequent pair; ties by frequency of the left symbol, then by the
  // (left, right) texts. Pairs that would exceed max_piece_length are skipped.
  std::optional<PairKey> best_pair() const {
    std::optional<PairKey> best;
    std::int64_t best_count = 0;
    for (const auto& [key, count] : pair_count_) {
      if (count <= 0) continue;
      const SymbolId l = left_of(key);
      const SymbolId r = right_of(key);
      if (text_[l].size() + text_[r].size() > config_.max_piece_length) continue;
      if (!best) {
        best = key;
        best_count = count;
        continue;
      }
      const SymbolId bl = left_of(*best);
      const SymbolId br = right_of(*best);
      bool better = false;
      if (count != best_count) {
        better = count > best_count;
      } else if (symbol_freq_[l] != symbol_freq_[bl]) {
        better = symbol_freq_[l] > symbol_freq_[bl];
      } else if (text_[l] != text_[bl]) {
        better = text_[l] < text_[bl];
      } else {
        better = text_[r] < text_[br];
      }
      if (better) {
        best = key;
        best_count = count;
      }
    }
    return best;
  }

  void apply_merge(PairKey key, SymbolId merged) {
    const SymbolId l = left_of(key);
    const SymbolId r = right_of(key);
    std::vector<std::size_t> touched = std::move(pair_words_[key]);
    pair_words_.erase(key);
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (std::size_t w : touched) {
      auto& symbols = words_[w];
      bool present = false;
      for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
        if (symbols[i] == l && symbols[i + 1] == r) {
          present = true;
          break;
        }
      }
      if (!present) continue;
      add_word(w, -1);
      std::vector<SymbolId> out;
      out.reserve(symbols.size());
      for (std::size_t i = 0; i < symbols.size();) {
        if (i + 1 < symbols.size() && symbols[i] == l && symbols[i + 1] == r) {
          out.push_back(merged);
          i += 2;
        } else {
          out.push_back(symbols[i]);
          ++i;
        }
      }
      symbols = std::move(out);
      add_word(w, +1);
    }
  }

  const SegmentTable& table_;
  const TrainerConfig& config_;

  std::map<std::u32string, SymbolId> ids_;
  std::vector<std::u32string> text_;
  std::vector<std::int64_t> symbol_freq_;
  std::vector<std::vector<SymbolId>> words_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<PairKey, std::int64_t> pair_count_;
  std::unordered_map<PairKey, std::vector<std::size_t>> pair_words_;
};

}  // namespace

Vocabulary train_bpe(const LanguageCorpus& corpus, const TrainerConfig& config) {
  config.validate();
  const SegmentTable table = SegmentTable::build(corpus, config.character_coverage);
  const std::size_t floor = size_floor(table);
  if (config.target_size < floor) {
    throw_training("target size " + std::to_string(config.target_size) +
                   " is below the floor of " + std::to_string(floor) + " (" +
                   std::to_string(table.alphabet.size()) + " alphabet characters + 1 special)");
  }
  return BpeTrainer(table, config).run();
}

}  // namespace mvocab
