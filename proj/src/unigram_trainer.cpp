#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string_view>
#include <unordered_map>

#include "mvocab/error.hpp"
#include "mvocab/trainer.hpp"
#include "mvocab/utf8.hpp"

namespace mvocab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  return a > b ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

struct U32Hash {
  using is_transparent = void;
  std::size_t operator()(std::u32string_view s) const {
    return std::hash<std::u32string_view>{}(s);
  }
};

// Character trie over the current piece set.
class PieceTrie {
 public:
  explicit PieceTrie(const std::vector<std::u32string>& pieces) {
    node_piece_.push_back(-1);
    for (std::size_t id = 0; id < pieces.size(); ++id) {
      std::int32_t node = 0;
      for (char32_t cp : pieces[id]) {
        const std::uint64_t key = (static_cast<std::uint64_t>(node) << 32) | cp;
        auto [it, inserted] =
            children_.emplace(key, static_cast<std::int32_t>(node_piece_.size()));
        if (inserted) node_piece_.push_back(-1);
        node = it->second;
      }
      node_piece_[node] = static_cast<std::int32_t>(id);
    }
  }

  // -1 when there is no such child.
  std::int32_t child(std::int32_t node, char32_t cp) const {
    auto it = children_.find((static_cast<std::uint64_t>(node) << 32) | cp);
    return it == children_.end() ? -1 : it->second;
  }
  std::int32_t piece_at(std::int32_t node) const { return node_piece_[node]; }

 private:
  std::unordered_map<std::uint64_t, std::int32_t> children_;
  std::vector<std::int32_t> node_piece_;
};

struct Edge {
  std::uint32_t start;
  std::uint32_t end;
  std::int32_t piece;
};

class UnigramTrainer {
 public:
  UnigramTrainer(const SegmentTable& table, const TrainerConfig& config,
                 TrainingTrace* trace)
      : table_(table), config_(config), trace_(trace) {}

  Vocabulary run() {
    seed();
    std::size_t round = 0;
    while (vocab_size() > config_.target_size) {
      const double nll = run_em(round);
      prune(round, nll);
      ++round;
    }
    run_em(round);

    std::vector<std::pair<std::string, double>> probabilities;
    probabilities.reserve(pieces_.size());
    for (std::size_t i = 0; i < pieces_.size(); ++i) {
      probabilities.emplace_back(utf8::encode(pieces_[i]), std::exp(logp_[i]));
    }
    return make_unigram_vocabulary(
        std::move(probabilities),
        Vocabulary::Metadata{config_.character_coverage, config_.random_seed});
  }

 private:
  std::size_t vocab_size() const { return pieces_.size() + 1; }

  void seed() {
    std::unordered_map<std::u32string, std::uint64_t, U32Hash, std::equal_to<>> substrings;
    std::unordered_map<char32_t, std::uint64_t> char_freq;
    for (const auto& [segment, count] : table_.segments) {
      const std::u32string_view s = segment;
      for (std::size_t i = 0; i < s.size(); ++i) {
        char_freq[s[i]] += count;
        const std::size_t max_len = std::min(config_.max_piece_length, s.size() - i);
        for (std::size_t len = 2; len <= max_len; ++len) {
          const auto sub = s.substr(i, len);
          if (auto it = substrings.find(sub); it != substrings.end()) {
            it->second += count;
          } else {
            substrings.emplace(std::u32string(sub), count);
          }
        }
      }
    }

    const std::u32string unk = utf8::decode(kUnkPiece);
    struct Candidate {
      std::u32string text;
      std::uint64_t freq;
      double score;
    };
    std::vector<Candidate> candidates;
    candidates.reserve(substrings.size());
    for (auto& [text, freq] : substrings) {
      // A substring seen once can only memorize its sentence.
      if (freq < 2 || text == unk) continue;
      const double score = static_cast<double>(freq) * static_cast<double>(text.size());
      candidates.push_back({text, freq, score});
    }
    substrings.clear();
    const auto better = [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.text < b.text;
    };
    if (candidates.size() > config_.seed_size) {
      std::nth_element(candidates.begin(),
                       candidates.begin() + static_cast<std::ptrdiff_t>(config_.seed_size),
                       candidates.end(), better);
      candidates.resize(config_.seed_size);
    }
    std::sort(candidates.begin(), candidates.end(), better);
    if (trace_) trace_->seed_pool_size = candidates.size();

    std::vector<double> freq;
    for (char32_t cp : table_.alphabet) {
      pieces_.emplace_back(1, cp);
      is_char_.push_back(true);
      auto it = char_freq.find(cp);
      // U+2581 is always in the alphabet even if the corpus never shows it
      // in a segment; give such characters a token count.
      freq.push_back(it == char_freq.end() ? 1.0 : static_cast<double>(it->second));
    }
    for (auto& c : candidates) {
      pieces_.push_back(std::move(c.text));
      is_char_.push_back(false);
      freq.push_back(static_cast<double>(c.freq));
    }
    const double total = std::accumulate(freq.begin(), freq.end(), 0.0);
    logp_.resize(pieces_.size());
    for (std::size_t i = 0; i < pieces_.size(); ++i) logp_[i] = std::log(freq[i] / total);
    rebuild_lattice();
  }

  void rebuild_lattice() {
    const PieceTrie trie(pieces_);
    edges_.clear();
    offsets_.assign(1, 0);
    max_length_ = 0;
    for (const auto& [segment, count] : table_.segments) {
      const std::size_t n = segment.size();
      max_length_ = std::max(max_length_, n);
      for (std::size_t i = 0; i < n; ++i) {
        std::int32_t node = 0;
        const std::size_t stop = std::min(n, i + config_.max_piece_length);
        for (std::size_t j = i; j < stop; ++j) {
          node = trie.child(node, segment[j]);
          if (node < 0) break;
          if (const auto piece = trie.piece_at(node); piece >= 0) {
            edges_.push_back({static_cast<std::uint32_t>(i),
                              static_cast<std::uint32_t>(j + 1), piece});
          }
        }
      }
      offsets_.push_back(edges_.size());
    }
    alpha_.assign(max_length_ + 1, kNegInf);
    beta_.assign(max_length_ + 1, kNegInf);
  }

  // Log partition of segment `s`, skipping edges of piece `excluded`.
  double log_partition(std::size_t s, std::int32_t excluded = -1) {
    const std::size_t n = table_.segments[s].first.size();
    std::fill_n(alpha_.begin(), n + 1, kNegInf);
    alpha_[0] = 0.0;
    for (std::size_t e = offsets_[s]; e < offsets_[s + 1]; ++e) {
      const Edge& edge = edges_[e];
      const double lp = logp_[edge.piece];
      if (edge.piece == excluded || lp == kNegInf || alpha_[edge.start] == kNegInf) continue;
      alpha_[edge.end] = log_add(alpha_[edge.end], alpha_[edge.start] + lp);
    }
    return alpha_[n];
  }

  // log_partition() in linear space. Terms that underflow are below 1e-308
  // and every suffix sum is at most the segment length, so when the result
  // exceeds 1e-250 it matches the log-space value to double precision.
  // Returns NaN when the caller must fall back to log space.
  double log_partition_linear(std::size_t s, std::int32_t excluded) {
    const std::size_t n = table_.segments[s].first.size();
    std::fill_n(alpha_.begin(), n + 1, 0.0);
    alpha_[0] = 1.0;
    for (std::size_t e = offsets_[s]; e < offsets_[s + 1]; ++e) {
      const Edge& edge = edges_[e];
      if (edge.piece == excluded) continue;
      alpha_[edge.end] += alpha_[edge.start] * prob_[edge.piece];
    }
    return alpha_[n] > 1e-250 ? std::log(alpha_[n]) : std::numeric_limits<double>::quiet_NaN();
  }

  // One E-step; returns corpus NLL under the current parameters.
  double expectation(std::vector<double>& expected) {
    expected.assign(pieces_.size(), 0.0);
    log_z_.resize(table_.segments.size());
    double nll = 0.0;
    for (std::size_t s = 0; s < table_.segments.size(); ++s) {
      const auto& [segment, count] = table_.segments[s];
      const std::size_t n = segment.size();
      const double log_z = log_partition(s);
      log_z_[s] = log_z;
      std::fill_n(beta_.begin(), n + 1, kNegInf);
      beta_[n] = 0.0;
      for (std::size_t e = offsets_[s + 1]; e-- > offsets_[s];) {
        const Edge& edge = edges_[e];
        const double lp = logp_[edge.piece];
        if (lp == kNegInf || beta_[edge.end] == kNegInf) continue;
        beta_[edge.start] = log_add(beta_[edge.start], lp + beta_[edge.end]);
      }
      const double weight = static_cast<double>(count);
      for (std::size_t e = offsets_[s]; e < offsets_[s + 1]; ++e) {
        const Edge& edge = edges_[e];
        const double lp = logp_[edge.piece];
        if (lp == kNegInf || alpha_[edge.start] == kNegInf || beta_[edge.end] == kNegInf) {
          continue;
        }
        expected[edge.piece] +=
            weight * std::exp(alpha_[edge.start] + lp + beta_[edge.end] - log_z);
      }
      nll -= weight * log_z;
    }
    return nll;
  }

  double corpus_nll() {
    log_z_.resize(table_.segments.size());
    double nll = 0.0;
    for (std::size_t s = 0; s < table_.segments.size(); ++s) {
      log_z_[s] = log_partition(s);
      nll -= static_cast<double>(table_.segments[s].second) * log_z_[s];
    }
    return nll;
  }

  // Runs the configured EM iterations and returns the NLL of the resulting
  // parameters (log_z_ is left consistent with them).
  double run_em(std::size_t round) {
    std::vector<double> expected;
    for (std::size_t it = 0; it < config_.em_iterations_per_round; ++it) {
      const double nll = expectation(expected);
      record_em(round, it, nll);
      const double total = std::accumulate(expected.begin(), expected.end(), 0.0);
      for (std::size_t i = 0; i < pieces_.size(); ++i) {
        logp_[i] = expected[i] > 0.0 ? std::log(expected[i] / total) : kNegInf;
      }
    }
    const double nll = corpus_nll();
    record_em(round, config_.em_iterations_per_round, nll);
    return nll;
  }

  void record_em(std::size_t round, std::size_t iteration, double nll) {
    if (trace_) trace_->em_steps.push_back({round, iteration, vocab_size(), nll});
  }

  void prune(std::size_t round, double nll) {
    // Segment lists per learned piece, from the lattice.
    std::vector<std::size_t> start(pieces_.size() + 1, 0);
    std::vector<std::size_t> last(pieces_.size(), SIZE_MAX);
    for (std::size_t s = 0; s < table_.segments.size(); ++s) {
      for (std::size_t e = offsets_[s]; e < offsets_[s + 1]; ++e) {
        const auto p = static_cast<std::size_t>(edges_[e].piece);
        if (is_char_[p] || logp_[p] == kNegInf || last[p] == s) continue;
        last[p] = s;
        ++start[p + 1];
      }
    }
    std::partial_sum(start.begin(), start.end(), start.begin());
    std::vector<std::size_t> members(start.back());
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    std::fill(last.begin(), last.end(), SIZE_MAX);
    for (std::size_t s = 0; s < table_.segments.size(); ++s) {
      for (std::size_t e = offsets_[s]; e < offsets_[s + 1]; ++e) {
        const auto p = static_cast<std::size_t>(edges_[e].piece);
        if (is_char_[p] || logp_[p] == kNegInf || last[p] == s) continue;
        last[p] = s;
        members[fill[p]++] = s;
      }
    }

    prob_.resize(pieces_.size());
    for (std::size_t p = 0; p < pieces_.size(); ++p) prob_[p] = std::exp(logp_[p]);

    struct Loss {
      std::size_t piece;
      double delta;
    };
    std::vector<Loss> losses;
    for (std::size_t p = 0; p < pieces_.size(); ++p) {
      if (is_char_[p]) continue;
      double delta = 0.0;
      for (std::size_t k = start[p]; k < start[p + 1]; ++k) {
        const std::size_t s = members[k];
        const auto excluded = static_cast<std::int32_t>(p);
        double without = log_partition_linear(s, excluded);
        if (std::isnan(without)) without = log_partition(s, excluded);
        delta += static_cast<double>(table_.segments[s].second) * (log_z_[s] - without);
      }
      losses.push_back({p, delta});
    }
    std::sort(losses.begin(), losses.end(), [this](const Loss& a, const Loss& b) {
      if (a.delta != b.delta) return a.delta < b.delta;
      return pieces_[a.piece] < pieces_[b.piece];
    });

    const std::size_t excess = vocab_size() - config_.target_size;
    const auto fraction = static_cast<std::size_t>(
        config_.prune_fraction * static_cast<double>(losses.size()));
    const std::size_t count = std::min(excess, std::max<std::size_t>(1, fraction));

    std::vector<bool> drop(pieces_.size(), false);
    for (std::size_t i = 0; i < count; ++i) drop[losses[i].piece] = true;

    if (trace_) {
      TrainingTrace::PruneRound record;
      record.round = round;
      record.nll = nll;
      for (std::size_t p = 0; p < pieces_.size(); ++p) {
        record.pieces.emplace_back(utf8::encode(pieces_[p]), logp_[p]);
      }
      for (const auto& l : losses) {
        record.losses.emplace_back(utf8::encode(pieces_[l.piece]), l.delta);
      }
      for (std::size_t i = 0; i < count; ++i) {
        record.pruned.push_back(utf8::encode(pieces_[losses[i].piece]));
      }
      trace_->prune_rounds.push_back(std::move(record));
    }

    std::vector<std::int32_t> remap(pieces_.size(), -1);
    std::size_t out = 0;
    for (std::size_t p = 0; p < pieces_.size(); ++p) {
      if (drop[p]) continue;
      if (out != p) pieces_[out] = std::move(pieces_[p]);
      is_char_[out] = is_char_[p];
      logp_[out] = logp_[p];
      remap[p] = static_cast<std::int32_t>(out);
      ++out;
    }
    pieces_.resize(out);
    is_char_.resize(out);
    logp_.resize(out);
    filter_lattice(remap);
  }

  // Drops edges of removed pieces and renumbers the rest; equivalent to
  // rebuild_lattice() on the reduced piece set.
  void filter_lattice(const std::vector<std::int32_t>& remap) {
    std::size_t kept = 0;
    std::size_t begin = offsets_[0];
    for (std::size_t s = 0; s + 1 < offsets_.size(); ++s) {
      const std::size_t end = offsets_[s + 1];
      for (std::size_t e = begin; e < end; ++e) {
        const std::int32_t piece = remap[static_cast<std::size_t>(edges_[e].piece)];
        if (piece < 0) continue;
        edges_[kept] = edges_[e];
        edges_[kept].piece = piece;
        ++kept;
      }
      begin = end;
      offsets_[s + 1] = kept;
    }
    edges_.resize(kept);
  }

  const SegmentTable& table_;
  const TrainerConfig& config_;
  TrainingTrace* trace_;

  std::vector<std::u32string> pieces_;  // characters first, then learned
  std::vector<bool> is_char_;
  std::vector<double> logp_;
  std::vector<double> prob_;  // exp(logp_), refreshed before pruning

  std::vector<Edge> edges_;
  std::vector<std::size_t> offsets_;
  std::vector<double> log_z_;
  std::vector<double> alpha_;
  std::vector<double> beta_;
  std::size_t max_length_ = 0;
};

}  // namespace

Vocabulary train_unigram(const LanguageCorpus& corpus, const TrainerConfig& config,
                         TrainingTrace* trace) {
  config.validate();
  const SegmentTable table = SegmentTable::build(corpus, config.character_coverage);
  const std::size_t floor = size_floor(table);
  if (config.target_size < floor) {
    throw_training("target size " + std::to_string(config.target_size) +
                   " is below the floor of " + std::to_string(floor) + " (" +
                   std::to_string(table.alphabet.size()) + " alphabet characters + 1 special)");
  }
  return UnigramTrainer(table, config, trace).run();
}

}  // namespace mvocab
