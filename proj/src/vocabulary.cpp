#include "mvocab/vocabulary.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "mvocab/error.hpp"
#include "mvocab/hash.hpp"
#include "mvocab/utf8.hpp"

namespace mvocab {

namespace {

double quantize(double score) { return std::round(score * 1e6) / 1e6; }

std::string format_score(double score) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", score);
  return buf;
}

bool canonical_less(Algorithm algorithm, const Piece& a, const Piece& b) {
  auto rank = [](PieceKind k) {
    switch (k) {
      case PieceKind::kSpecial: return 0;
      case PieceKind::kCharacter: return 1;
      case PieceKind::kLearned: return 2;
    }
    return 2;
  };
  if (algorithm == Algorithm::kBpe) {
    if (rank(a.kind) != rank(b.kind)) return rank(a.kind) < rank(b.kind);
    if (a.kind == PieceKind::kLearned && a.score != b.score) return a.score < b.score;
    return a.text < b.text;
  }
  const bool a_special = a.kind == PieceKind::kSpecial;
  const bool b_special = b.kind == PieceKind::kSpecial;
  if (a_special != b_special) return a_special;
  if (a.score != b.score) return a.score > b.score;
  return a.text < b.text;
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
  return algorithm == Algorithm::kBpe ? "bpe" : "unigram";
}

Algorithm parse_algorithm(std::string_view name) {
  if (name == "unigram") return Algorithm::kUnigram;
  if (name == "bpe") return Algorithm::kBpe;
  throw_usage("unknown algorithm '" + std::string(name) + "' (expected unigram|bpe)");
}

PieceKind classify_piece(std::string_view text) {
  if (text == kUnkPiece) return PieceKind::kSpecial;
  return utf8::codepoint_count(text) == 1 ? PieceKind::kCharacter : PieceKind::kLearned;
}

Vocabulary::Vocabulary(Algorithm algorithm, std::vector<Piece> pieces,
                       Metadata metadata)
    : algorithm_(algorithm), metadata_(metadata) {
  std::erase_if(pieces, [](const Piece& p) { return p.text == kUnkPiece; });

  double min_score = 0.0;
  std::set<double> ranks;
  for (auto& p : pieces) {
    if (p.text.empty()) throw_training("empty piece in vocabulary");
    if (!utf8::is_valid(p.text)) throw_training("piece is not valid UTF-8");
    if (p.text.find_first_of("\t\n\r") != std::string::npos) {
      throw_training("piece contains a tab or newline");
    }
    p.kind = classify_piece(p.text);
    if (!std::isfinite(p.score)) {
      throw_training("non-finite score for piece '" + p.text + "'");
    }
    if (algorithm == Algorithm::kUnigram) {
      p.score = quantize(p.score);
      if (p.score > 0.0) {
        throw_training("unigram score above zero for piece '" + p.text + "'");
      }
      min_score = std::min(min_score, p.score);
    } else if (p.kind == PieceKind::kLearned) {
      if (p.score < 0.0 || p.score != std::floor(p.score) || !ranks.insert(p.score).second) {
        throw_training("BPE merge ranks must be distinct non-negative integers");
      }
    } else {
      p.score = kBpeBaseScore;
    }
  }
  const double unk_score = algorithm == Algorithm::kUnigram
                               ? quantize(min_score - kUnkPenalty)
                               : kBpeBaseScore;
  pieces.push_back(Piece{std::string(kUnkPiece), unk_score, PieceKind::kSpecial});

  std::sort(pieces.begin(), pieces.end(), [algorithm](const Piece& a, const Piece& b) {
    return canonical_less(algorithm, a, b);
  });
  pieces_ = std::move(pieces);

  index_.reserve(pieces_.size());
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (!index_.emplace(pieces_[i].text, i).second) {
      throw_training("duplicate piece '" + pieces_[i].text + "'");
    }
    if (pieces_[i].kind == PieceKind::kSpecial) {
      unk_id_ = i;
    } else {
      max_piece_length_ = std::max(max_piece_length_, utf8::codepoint_count(pieces_[i].text));
    }
  }
}

std::optional<std::size_t> Vocabulary::find(std::string_view text) const {
  auto it = index_.find(text);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<char32_t> Vocabulary::alphabet() const {
  std::vector<char32_t> out;
  for (const auto& p : pieces_) {
    if (p.kind == PieceKind::kCharacter) out.push_back(utf8::decode(p.text).front());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::string Vocabulary::identity() const { return sha256_hex(serialize()); }

std::string Vocabulary::serialize() const {
  std::string out;
  out.reserve(pieces_.size() * 24 + 128);
  out += "# algorithm=";
  out += to_string(algorithm_);
  out += "\n# size=" + std::to_string(pieces_.size());
  out += "\n# coverage=" + format_score(metadata_.character_coverage);
  out += "\n# seed=" + std::to_string(metadata_.seed) + "\n";
  for (const auto& p : pieces_) {
    out += p.text;
    out += '\t';
    out += format_score(p.score);
    out += '\n';
  }
  return out;
}

Vocabulary Vocabulary::parse(std::string_view text) {
  std::optional<Algorithm> algorithm;
  Metadata metadata;
  std::optional<std::size_t> declared_size;
  std::vector<Piece> pieces;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '#') {
      line.remove_prefix(1);
      while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) continue;
      const std::string key(line.substr(0, eq));
      const std::string value(line.substr(eq + 1));
      try {
        if (key == "algorithm") algorithm = parse_algorithm(value);
        else if (key == "size") declared_size = std::stoull(value);
        else if (key == "coverage") metadata.character_coverage = std::stod(value);
        else if (key == "seed") metadata.seed = std::stoll(value);
      } catch (const std::logic_error&) {
        throw_io("vocabulary line " + std::to_string(line_no) + ": bad header value");
      }
      continue;
    }
    const auto tab = line.rfind('\t');
    if (tab == std::string_view::npos) {
      throw_io("vocabulary line " + std::to_string(line_no) + ": expected piece<TAB>score");
    }
    Piece piece;
    piece.text = std::string(line.substr(0, tab));
    const std::string score_text(line.substr(tab + 1));
    char* end = nullptr;
    piece.score = std::strtod(score_text.c_str(), &end);
    if (end == score_text.c_str() || *end != '\0') {
      throw_io("vocabulary line " + std::to_string(line_no) + ": bad score");
    }
    pieces.push_back(std::move(piece));
  }
  if (!algorithm) throw_io("vocabulary is missing the '# algorithm=' header");
  Vocabulary vocab(*algorithm, std::move(pieces), metadata);
  if (declared_size && *declared_size != vocab.size()) {
    throw_io("vocabulary size header disagrees with piece count");
  }
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  write_file_atomic(path, serialize());
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  return parse(read_file(path));
}

Vocabulary make_unigram_vocabulary(
    std::vector<std::pair<std::string, double>> probabilities,
    Vocabulary::Metadata metadata) {
  // Floor keeps every score finite; pieces that lost all mass in EM end up
  // near log(1e-30).
  constexpr double kFloor = 1e-30;
  double total = 0.0;
  for (auto& [text, p] : probabilities) {
    if (!(p >= 0.0) || !std::isfinite(p)) throw_training("invalid piece probability");
    p = std::max(p, kFloor);
    total += p;
  }
  std::vector<Piece> pieces;
  pieces.reserve(probabilities.size() + 1);
  for (auto& [text, p] : probabilities) {
    pieces.push_back(Piece{std::move(text), std::min(0.0, std::log(p / total)),
                           PieceKind::kLearned});
  }
  return Vocabulary(Algorithm::kUnigram, std::move(pieces), metadata);
}

Vocabulary union_vocab(std::span<const Vocabulary> vocabs) {
  if (vocabs.empty()) throw_usage("union of zero vocabularies");
  const Algorithm algorithm = vocabs.front().algorithm();
  for (const auto& v : vocabs) {
    if (v.algorithm() != algorithm) {
      throw_usage("cannot union unigram and BPE vocabularies");
    }
  }
  if (vocabs.size() == 1) return vocabs.front();

  if (algorithm == Algorithm::kUnigram) {
    std::map<std::string, double> best;
    for (const auto& v : vocabs) {
      for (const auto& p : v.pieces()) {
        if (p.kind == PieceKind::kSpecial) continue;
        const double prob = std::exp(p.score);
        auto [it, inserted] = best.emplace(p.text, prob);
        if (!inserted) it->second = std::max(it->second, prob);
      }
    }
    return make_unigram_vocabulary({best.begin(), best.end()},
                                   vocabs.front().metadata());
  }

  std::map<std::string, double> first_rank;
  std::set<std::string> characters;
  for (const auto& v : vocabs) {
    for (const auto& p : v.pieces()) {
      if (p.kind == PieceKind::kCharacter) characters.insert(p.text);
      if (p.kind != PieceKind::kLearned) continue;
      auto [it, inserted] = first_rank.emplace(p.text, p.score);
      if (!inserted) it->second = std::min(it->second, p.score);
    }
  }
  std::vector<std::pair<double, std::string>> merges;
  merges.reserve(first_rank.size());
  for (const auto& [text, rank] : first_rank) merges.emplace_back(rank, text);
  std::sort(merges.begin(), merges.end());
  std::vector<Piece> pieces;
  for (const auto& c : characters) pieces.push_back(Piece{c, kBpeBaseScore, PieceKind::kCharacter});
  for (std::size_t r = 0; r < merges.size(); ++r) {
    pieces.push_back(Piece{merges[r].second, static_cast<double>(r), PieceKind::kLearned});
  }
  return Vocabulary(Algorithm::kBpe, std::move(pieces), vocabs.front().metadata());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_io("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw_io("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw_io("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mvocab
