#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mvocab {

enum class Algorithm { kUnigram, kBpe };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);

enum class PieceKind { kSpecial, kCharacter, kLearned };

inline constexpr std::string_view kUnkPiece = "<unk>";

// Unigram UNK score sits this far below the least likely piece.
inline constexpr double kUnkPenalty = 10.0;

// Score of non-merge entries (characters, UNK) in a BPE vocabulary.
inline constexpr double kBpeBaseScore = -1.0;

struct Piece {
  std::string text;
  // Unigram: log-probability. BPE: merge rank for learned pieces,
  // kBpeBaseScore otherwise.
  double score = 0.0;
  PieceKind kind = PieceKind::kLearned;

  friend bool operator==(const Piece&, const Piece&) = default;
};

PieceKind classify_piece(std::string_view text);

// Scored subword inventory in canonical order:
//   unigram: UNK, then descending score, ties by bytewise text;
//   BPE:     UNK, characters by text, merges by ascending rank.
// The canonical order is the vocabulary's index space.
struct VocabMetadata {
  double character_coverage = 0.9995;
  long long seed = 0;
};

class Vocabulary {
 public:
  using Metadata = VocabMetadata;

  Vocabulary() = default;

  // Sorts pieces into canonical order and validates the invariants (unique
  // texts, exactly one UNK, finite scores, distinct BPE ranks).
  Vocabulary(Algorithm algorithm, std::vector<Piece> pieces, Metadata metadata = {});

  Algorithm algorithm() const { return algorithm_; }
  const Metadata& metadata() const { return metadata_; }
  const std::vector<Piece>& pieces() const { return pieces_; }
  std::size_t size() const { return pieces_.size(); }

  std::optional<std::size_t> find(std::string_view text) const;
  bool contains(std::string_view text) const { return find(text).has_value(); }
  std::size_t unk_id() const { return unk_id_; }

  // Longest piece in code points (UNK excluded).
  std::size_t max_piece_length() const { return max_piece_length_; }

  // Single-code-point pieces, ascending.
  std::vector<char32_t> alphabet() const;

  // Content hash of the serialized form.
  std::string identity() const;

  std::string serialize() const;
  static Vocabulary parse(std::string_view text);

  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.algorithm_ == b.algorithm_ && a.pieces_ == b.pieces_;
  }

 private:
  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const {
      return std::hash<std::string_view>{}(s);
    }
  };

  Algorithm algorithm_ = Algorithm::kUnigram;
  Metadata metadata_;
  std::vector<Piece> pieces_;
  std::unordered_map<std::string, std::size_t, StringHash, std::equal_to<>> index_;
  std::size_t unk_id_ = 0;
  std::size_t max_piece_length_ = 0;
};

// Builds a unigram vocabulary from non-special (text, probability) pairs:
// probabilities are renormalized to sum to one, UNK is added.
Vocabulary make_unigram_vocabulary(
    std::vector<std::pair<std::string, double>> probabilities,
    Vocabulary::Metadata metadata = {});

// Set union of the piece inventories. Unigram duplicates keep the larger
// probability and the result is renormalized; BPE duplicates keep the
// earlier rank and ranks are re-densified. A single input is returned as is.
Vocabulary union_vocab(std::span<const Vocabulary> vocabs);

// Writes to a sibling temp file and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

}  // namespace mvocab
