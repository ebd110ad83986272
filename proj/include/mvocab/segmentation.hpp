#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvocab/vocabulary.hpp"

namespace mvocab {

struct Segmentation {
  std::vector<std::string> pieces;
  std::vector<std::size_t> ids;  // indices into the vocabulary
  std::size_t oov_count = 0;
  // The original character behind each UNK piece, in order.
  std::vector<std::string> oov_originals;
  double log_prob = 0.0;  // unigram only: sum of piece scores

  std::size_t token_count() const { return pieces.size(); }
};

// Rendering of an UNK piece when no original text is available.
inline constexpr std::string_view kUnkSurface = "\xe2\x81\x87";  // U+2047

// Segments already-normalized text. Unigram: maximum total score over the
// piece lattice; ties go to fewer pieces, then the lexicographically smallest
// piece sequence. BPE: replays merges by ascending rank, leftmost first.
// A character with no single-character piece becomes one UNK piece.
Segmentation encode(const Vocabulary& vocab, std::string_view normalized);

// normalize() followed by encode().
Segmentation encode_text(const Vocabulary& vocab, std::string_view raw);

// Concatenates pieces and reverses the boundary substitution. UNK pieces take
// their text from `originals` in order, or render as U+2047 without it.
std::string decode(const Vocabulary& vocab, std::span<const std::string> pieces,
                   std::optional<std::span<const std::string>> originals = std::nullopt);
std::string decode(const Vocabulary& vocab, const Segmentation& segmentation);

}  // namespace mvocab
