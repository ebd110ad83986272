#include "mvocab/segmentation.hpp"

#include <algorithm>
#include <limits>

#include "mvocab/corpus.hpp"
#include "mvocab/utf8.hpp"

namespace mvocab {

namespace {

constexpr std::size_t kUnkEdge = std::numeric_limits<std::size_t>::max();

bool is_single_char_piece(const Vocabulary& vocab, std::string_view ch) {
  auto id = vocab.find(ch);
  return id && vocab.pieces()[*id].kind == PieceKind::kCharacter;
}

Segmentation encode_unigram(const Vocabulary& vocab, std::string_view text) {
  const auto offsets = utf8::codepoint_offsets(text);
  const std::size_t n = offsets.size() - 1;
  const std::size_t max_len = std::max<std::size_t>(1, vocab.max_piece_length());
  const std::string& unk_text = vocab.pieces()[vocab.unk_id()].text;
  const double unk_score = vocab.pieces()[vocab.unk_id()].score;

  // Suffix DP: best[i] describes the best segmentation of text[i..n). With
  // the suffix fixed by its first piece, comparing that first piece alone
  // implements the lexicographic tie-break exactly.
  struct Cell {
    double score = -std::numeric_limits<double>::infinity();
    std::size_t count = 0;
    std::size_t piece = kUnkEdge;
    std::size_t next = 0;
  };
  std::vector<Cell> best(n + 1);
  best[n].score = 0.0;

  auto consider = [&](Cell& cell, std::size_t piece, std::string_view piece_text,
                      double piece_score, std::size_t next) {
    const Cell& tail = best[next];
    const double score = piece_score + tail.score;
    const std::size_t count = tail.count + 1;
    bool take = false;
    if (cell.count == 0) {
      take = true;
    } else if (score != cell.score) {
      take = score > cell.score;
    } else if (count != cell.count) {
      take = count < cell.count;
    } else {
      const std::string_view current =
          cell.piece == kUnkEdge ? std::string_view(unk_text)
                                 : std::string_view(vocab.pieces()[cell.piece].text);
      take = piece_text < current;
    }
    if (take) cell = Cell{score, count, piece, next};
  };

  for (std::size_t i = n; i-- > 0;) {
    Cell& cell = best[i];
    const std::size_t stop = std::min(n, i + max_len);
    for (std::size_t j = i + 1; j <= stop; ++j) {
      const std::string_view sub = text.substr(offsets[i], offsets[j] - offsets[i]);
      if (auto id = vocab.find(sub); id && *id != vocab.unk_id()) {
        consider(cell, *id, sub, vocab.pieces()[*id].score, j);
      }
    }
    const std::string_view ch = text.substr(offsets[i], offsets[i + 1] - offsets[i]);
    if (!is_single_char_piece(vocab, ch)) consider(cell, kUnkEdge, unk_text, unk_score, i + 1);
  }

  Segmentation seg;
  seg.log_prob = n == 0 ? 0.0 : best[0].score;
  for (std::size_t i = 0; i < n; i = best[i].next) {
    const Cell& cell = best[i];
    if (cell.piece == kUnkEdge) {
      seg.pieces.push_back(unk_text);
      seg.ids.push_back(vocab.unk_id());
      seg.oov_originals.emplace_back(text.substr(offsets[i], offsets[i + 1] - offsets[i]));
      ++seg.oov_count;
    } else {
      seg.pieces.push_back(vocab.pieces()[cell.piece].text);
      seg.ids.push_back(cell.piece);
    }
  }
  return seg;
}

// Merge replay over one boundary-delimited word.
void encode_bpe_word(const Vocabulary& vocab, std::string_view word, Segmentation& seg) {
  const auto offsets = utf8::codepoint_offsets(word);
  struct Symbol {
    std::string text;
    bool unk;
  };
  std::vector<Symbol> symbols;
  for (std::size_t i = 0; i + 1 < offsets.size(); ++i) {
    std::string ch(word.substr(offsets[i], offsets[i + 1] - offsets[i]));
    const bool unk = !is_single_char_piece(vocab, ch);
    symbols.push_back({std::move(ch), unk});
  }
  while (symbols.size() > 1) {
    std::size_t best_at = symbols.size();
    double best_rank = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      if (symbols[i].unk || symbols[i + 1].unk) continue;
      auto id = vocab.find(symbols[i].text + symbols[i + 1].text);
      if (!id) continue;
      const Piece& p = vocab.pieces()[*id];
      if (p.kind != PieceKind::kLearned) continue;
      if (p.score < best_rank) {
        best_rank = p.score;
        best_at = i;
      }
    }
    if (best_at == symbols.size()) break;
    symbols[best_at].text += symbols[best_at + 1].text;
    symbols.erase(symbols.begin() + static_cast<std::ptrdiff_t>(best_at) + 1);
  }
  for (auto& s : symbols) {
    if (s.unk) {
      seg.pieces.emplace_back(kUnkPiece);
      seg.ids.push_back(vocab.unk_id());
      seg.oov_originals.push_back(std::move(s.text));
      ++seg.oov_count;
    } else {
      seg.ids.push_back(*vocab.find(s.text));
      seg.pieces.push_back(std::move(s.text));
    }
  }
}

Segmentation encode_bpe(const Vocabulary& vocab, std::string_view text) {
  Segmentation seg;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t next = text.find(utf8::kBoundaryStr, start + 1);
    if (next == std::string_view::npos) next = text.size();
    encode_bpe_word(vocab, text.substr(start, next - start), seg);
    start = next;
  }
  return seg;
}

}  // namespace

Segmentation encode(const Vocabulary& vocab, std::string_view normalized) {
  return vocab.algorithm() == Algorithm::kBpe ? encode_bpe(vocab, normalized)
                                              : encode_unigram(vocab, normalized);
}

Segmentation encode_text(const Vocabulary& vocab, std::string_view raw) {
  return encode(vocab, normalize(raw));
}

std::string decode(const Vocabulary& vocab, std::span<const std::string> pieces,
                   std::optional<std::span<const std::string>> originals) {
  const std::string& unk_text = vocab.pieces()[vocab.unk_id()].text;
  std::string joined;
  std::size_t next_original = 0;
  for (const auto& p : pieces) {
    if (p == unk_text) {
      if (originals && next_original < originals->size()) {
        joined += (*originals)[next_original++];
      } else {
        joined += kUnkSurface;
      }
    } else {
      joined += p;
    }
  }
  return denormalize(joined);
}

std::string decode(const Vocabulary& vocab, const Segmentation& segmentation) {
  return decode(vocab, segmentation.pieces,
                std::span<const std::string>(segmentation.oov_originals));
}

}  // namespace mvocab
