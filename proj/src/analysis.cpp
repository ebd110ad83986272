#include "mvocab/analysis.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "mvocab/error.hpp"
#include "mvocab/parallel.hpp"
#include "mvocab/segmentation.hpp"
#include "mvocab/simd/kernels.hpp"
#include "mvocab/utf8.hpp"

namespace mvocab {

namespace {

struct Range {
  char32_t lo;
  char32_t hi;
};

constexpr Range kLatin[] = {{0x0041, 0x005A}, {0x0061, 0x007A}, {0x00C0, 0x00D6},
                            {0x00D8, 0x00F6}, {0x00F8, 0x024F}, {0x1E00, 0x1EFF},
                            {0x2C60, 0x2C7F}, {0xA720, 0xA7FF}, {0xFF21, 0xFF3A},
                            {0xFF41, 0xFF5A}};
constexpr Range kCyrillic[] = {{0x0400, 0x052F}, {0x1C80, 0x1C8F}, {0x2DE0, 0x2DFF},
                               {0xA640, 0xA69F}};
constexpr Range kGreek[] = {{0x0370, 0x03FF}, {0x1F00, 0x1FFF}};
constexpr Range kArabic[] = {{0x0600, 0x06FF}, {0x0750, 0x077F}, {0x08A0, 0x08FF},
                             {0xFB50, 0xFDFF}, {0xFE70, 0xFEFF}};
constexpr Range kHebrew[] = {{0x0590, 0x05FF}, {0xFB1D, 0xFB4F}};
constexpr Range kDevanagari[] = {{0x0900, 0x097F}, {0xA8E0, 0xA8FF}};
constexpr Range kThai[] = {{0x0E00, 0x0E7F}};
constexpr Range kHangul[] = {{0x1100, 0x11FF}, {0x3130, 0x318F}, {0xA960, 0xA97F},
                             {0xAC00, 0xD7AF}, {0xD7B0, 0xD7FF}};
constexpr Range kKana[] = {{0x3040, 0x309F}, {0x30A0, 0x30FF}, {0x31F0, 0x31FF},
                           {0xFF66, 0xFF9F}};
constexpr Range kHan[] = {{0x2E80, 0x2FDF}, {0x3400, 0x4DBF}, {0x4E00, 0x9FFF},
                          {0xF900, 0xFAFF}, {0x20000, 0x2FA1F}, {0x30000, 0x3134F}};
constexpr Range kCjkPunctuation[] = {{0x3000, 0x303F}};

template <std::size_t N>
bool in_ranges(char32_t cp, const Range (&ranges)[N]) {
  for (const auto& r : ranges) {
    if (cp >= r.lo && cp <= r.hi) return true;
  }
  return false;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  const std::size_t len = utf8::codepoint_count(s);
  if (len < width) s.append(width - len, ' ');
  return s;
}

nlohmann::ordered_json report_json(const AnalysisReport& r) {
  nlohmann::ordered_json j;
  j["vocab_ref"] = r.vocab_ref;
  j["vocab_size"] = r.vocab_size;
  j["description_length"] = r.corpus.description_length;
  j["oov_rate"] = r.corpus.oov_rate;
  auto& langs = j["languages"] = nlohmann::ordered_json::array();
  for (const auto& m : r.corpus.languages) {
    langs.push_back({{"language", m.language},
                     {"sentences", m.sentences},
                     {"pieces", m.pieces},
                     {"unk", m.unk},
                     {"weight", m.weight},
                     {"description_length", m.description_length()},
                     {"oov_rate", m.oov_rate()}});
  }
  j["script_table"] = std::string(kScriptTableVersion);
  j["script_fractions"] = r.script_fractions;
  j["w1_ground_metric"] = "canonical-order line, unit spacing";
  j["w1_languages"] = r.w1_languages;
  j["w1_matrix"] = r.w1_matrix;
  return j;
}

}  // namespace

SubwordDistribution empirical_distribution(const Vocabulary& vocab,
                                           const LanguageCorpus& corpus) {
  if (corpus.empty()) throw_usage("empirical distribution of an empty corpus");
  std::vector<double> counts(vocab.size(), 0.0);
  double total = 0.0;
  for (const auto& sentence : corpus.sentences()) {
    for (std::size_t id : encode_text(vocab, sentence).ids) {
      counts[id] += 1.0;
      total += 1.0;
    }
  }
  if (total > 0.0) {
    for (auto& c : counts) c /= total;
  }
  return SubwordDistribution{vocab.identity(), std::move(counts)};
}

double wasserstein1(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw_usage("W1 of distributions over different supports");
  if (p.size() < 2) return 0.0;
  std::vector<double> cdf_gap(p.size() - 1);
  double running = 0.0;
  for (std::size_t i = 0; i + 1 < p.size(); ++i) {
    running += p[i] - q[i];
    cdf_gap[i] = running;
  }
  return simd::sum_abs(cdf_gap);
}

double wasserstein1(const SubwordDistribution& p, const SubwordDistribution& q) {
  if (p.vocab_ref != q.vocab_ref) {
    throw_usage("W1 of distributions over different vocabularies");
  }
  return wasserstein1(std::span<const double>(p.probs), std::span<const double>(q.probs));
}

double LanguageMeasure::description_length() const {
  return sentences == 0 ? 0.0 : static_cast<double>(pieces) / static_cast<double>(sentences);
}

double LanguageMeasure::oov_rate() const {
  return pieces == 0 ? 0.0 : static_cast<double>(unk) / static_cast<double>(pieces);
}

CorpusMeasure measure(const Vocabulary& vocab, std::span<const LanguageCorpus> corpora,
                      const SamplingDistribution& sampling, std::size_t jobs) {
  if (corpora.empty()) throw_usage("measurement needs at least one corpus");
  CorpusMeasure out;
  out.languages.resize(corpora.size());
  parallel_for(corpora.size(), jobs, [&](std::size_t i) {
    const auto& corpus = corpora[i];
    LanguageMeasure m;
    m.language = corpus.language();
    m.sentences = corpus.sentence_count();
    m.weight = sampling.weight(corpus.language());
    for (const auto& sentence : corpus.sentences()) {
      const auto seg = encode_text(vocab, sentence);
      m.pieces += seg.token_count();
      m.unk += seg.oov_count;
    }
    out.languages[i] = std::move(m);
  });
  double expected_pieces = 0.0;
  double expected_unk = 0.0;
  for (const auto& m : out.languages) {
    if (m.sentences == 0) continue;
    expected_pieces += m.weight * m.description_length();
    expected_unk += m.weight * static_cast<double>(m.unk) / static_cast<double>(m.sentences);
  }
  out.description_length = expected_pieces;
  out.oov_rate = expected_pieces > 0.0 ? expected_unk / expected_pieces : 0.0;
  return out;
}

double description_length(const Vocabulary& vocab, std::span<const LanguageCorpus> corpora,
                          const SamplingDistribution& sampling) {
  return measure(vocab, corpora, sampling).description_length;
}

double oov_rate(const Vocabulary& vocab, std::span<const LanguageCorpus> corpora,
                const SamplingDistribution& sampling) {
  return measure(vocab, corpora, sampling).oov_rate;
}

std::string_view to_string(ScriptClass script) {
  switch (script) {
    case ScriptClass::kLatin: return "latin";
    case ScriptClass::kCyrillic: return "cyrillic";
    case ScriptClass::kGreek: return "greek";
    case ScriptClass::kArabic: return "arabic";
    case ScriptClass::kHebrew: return "hebrew";
    case ScriptClass::kDevanagari: return "devanagari";
    case ScriptClass::kThai: return "thai";
    case ScriptClass::kHangul: return "hangul";
    case ScriptClass::kKana: return "kana";
    case ScriptClass::kHan: return "han";
    case ScriptClass::kCjk: return "cjk";
  }
  return "unknown";
}

const std::vector<ScriptClass>& all_scripts() {
  static const std::vector<ScriptClass> scripts{
      ScriptClass::kLatin,  ScriptClass::kCyrillic, ScriptClass::kGreek,
      ScriptClass::kArabic, ScriptClass::kHebrew,   ScriptClass::kDevanagari,
      ScriptClass::kThai,   ScriptClass::kHangul,   ScriptClass::kKana,
      ScriptClass::kHan,    ScriptClass::kCjk};
  return scripts;
}

ScriptClass parse_script(std::string_view name) {
  for (auto s : all_scripts()) {
    if (to_string(s) == name) return s;
  }
  throw_usage("unknown script class '" + std::string(name) + "'");
}

bool in_script(char32_t cp, ScriptClass script) {
  switch (script) {
    case ScriptClass::kLatin: return in_ranges(cp, kLatin);
    case ScriptClass::kCyrillic: return in_ranges(cp, kCyrillic);
    case ScriptClass::kGreek: return in_ranges(cp, kGreek);
    case ScriptClass::kArabic: return in_ranges(cp, kArabic);
    case ScriptClass::kHebrew: return in_ranges(cp, kHebrew);
    case ScriptClass::kDevanagari: return in_ranges(cp, kDevanagari);
    case ScriptClass::kThai: return in_ranges(cp, kThai);
    case ScriptClass::kHangul: return in_ranges(cp, kHangul);
    case ScriptClass::kKana: return in_ranges(cp, kKana);
    case ScriptClass::kHan: return in_ranges(cp, kHan);
    case ScriptClass::kCjk:
      return in_ranges(cp, kHan) || in_ranges(cp, kKana) || in_ranges(cp, kHangul) ||
             in_ranges(cp, kCjkPunctuation);
  }
  return false;
}

double script_fraction(const Vocabulary& vocab, ScriptClass script) {
  std::size_t total = 0;
  std::size_t hits = 0;
  for (const auto& p : vocab.pieces()) {
    if (p.kind == PieceKind::kSpecial) continue;
    ++total;
    const auto cps = utf8::decode(p.text);
    if (std::any_of(cps.begin(), cps.end(), [&](char32_t cp) { return in_script(cp, script); })) {
      ++hits;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

AnalysisReport analyze(const Vocabulary& vocab, std::span<const LanguageCorpus> corpora,
                       const SamplingDistribution& sampling, std::size_t jobs) {
  AnalysisReport report;
  report.vocab_ref = vocab.identity();
  report.vocab_size = vocab.size();
  report.corpus = measure(vocab, corpora, sampling, jobs);
  for (auto s : all_scripts()) {
    report.script_fractions[std::string(to_string(s))] = script_fraction(vocab, s);
  }

  std::vector<SubwordDistribution> dists(corpora.size());
  parallel_for(corpora.size(), jobs, [&](std::size_t i) {
    if (!corpora[i].empty()) dists[i] = empirical_distribution(vocab, corpora[i]);
  });
  const std::size_t n = corpora.size();
  report.w1_matrix.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    report.w1_languages.push_back(corpora[i].language());
    for (std::size_t j = i + 1; j < n; ++j) {
      if (dists[i].probs.empty() || dists[j].probs.empty()) continue;
      const double w = wasserstein1(dists[i], dists[j]);
      report.w1_matrix[i][j] = w;
      report.w1_matrix[j][i] = w;
    }
  }
  return report;
}

std::string AnalysisReport::to_json() const { return report_json(*this).dump(2) + "\n"; }

std::string AnalysisReport::to_text() const {
  std::ostringstream out;
  out << "vocabulary " << vocab_ref.substr(0, 12) << "  size " << vocab_size << "\n";
  out << "avg DL " << fixed(corpus.description_length, 3) << "  OOV rate [%] "
      << fixed(100.0 * corpus.oov_rate, 3) << "\n\n";
  out << pad("language", 10) << pad("weight", 10) << pad("sentences", 11) << pad("DL", 10)
      << "OOV [%]\n";
  for (const auto& m : corpus.languages) {
    out << pad(m.language, 10) << pad(fixed(m.weight, 4), 10)
        << pad(std::to_string(m.sentences), 11) << pad(fixed(m.description_length(), 3), 10)
        << fixed(100.0 * m.oov_rate(), 3) << "\n";
  }
  out << "\nscript fractions [%] (" << kScriptTableVersion << ")\n";
  for (const auto& [script, f] : script_fractions) {
    out << "  " << pad(script, 12) << fixed(100.0 * f, 2) << "\n";
  }
  out << "\nW1 (x1000, canonical-order line metric)\n" << pad("", 10);
  for (const auto& l : w1_languages) out << pad(l, 10);
  out << "\n";
  for (std::size_t i = 0; i < w1_languages.size(); ++i) {
    out << pad(w1_languages[i], 10);
    for (double w : w1_matrix[i]) out << pad(fixed(1000.0 * w, 1), 10);
    out << "\n";
  }
  return out.str();
}

ComparisonReport compare(const Vocabulary& vocab_a, const Vocabulary& vocab_b,
                         std::span<const LanguageCorpus> corpora,
                         const SamplingDistribution& sampling, std::size_t jobs) {
  return ComparisonReport{analyze(vocab_a, corpora, sampling, jobs),
                          analyze(vocab_b, corpora, sampling, jobs)};
}

std::string ComparisonReport::to_json() const {
  nlohmann::ordered_json j;
  j["a"] = report_json(a);
  j["b"] = report_json(b);
  auto& d = j["delta"];
  d["description_length"] = b.corpus.description_length - a.corpus.description_length;
  d["oov_rate"] = b.corpus.oov_rate - a.corpus.oov_rate;
  auto& langs = d["languages"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < a.corpus.languages.size(); ++i) {
    const auto& la = a.corpus.languages[i];
    const auto& lb = b.corpus.languages[i];
    langs.push_back({{"language", la.language},
                     {"description_length", lb.description_length() - la.description_length()},
                     {"oov_rate", lb.oov_rate() - la.oov_rate()}});
  }
  auto& scripts = d["script_fractions"];
  for (const auto& [script, f] : a.script_fractions) {
    scripts[script] = b.script_fractions.at(script) - f;
  }
  return j.dump(2) + "\n";
}

std::string ComparisonReport::to_text() const {
  std::ostringstream out;
  out << pad("", 12) << pad("A", 12) << pad("B", 12) << "B-A\n";
  auto row = [&](const std::string& name, double va, double vb, int digits) {
    out << pad(name, 12) << pad(fixed(va, digits), 12) << pad(fixed(vb, digits), 12)
        << fixed(vb - va, digits) << "\n";
  };
  row("avg DL", a.corpus.description_length, b.corpus.description_length, 3);
  row("OOV [%]", 100.0 * a.corpus.oov_rate, 100.0 * b.corpus.oov_rate, 3);
  out << "\nper-language DL / OOV [%]\n";
  for (std::size_t i = 0; i < a.corpus.languages.size(); ++i) {
    const auto& la = a.corpus.languages[i];
    const auto& lb = b.corpus.languages[i];
    const double rel = la.description_length() > 0.0
                           ? 100.0 * (lb.description_length() - la.description_length()) /
                                 la.description_length()
                           : 0.0;
    out << pad(la.language, 12) << pad(fixed(la.description_length(), 3), 12)
        << pad(fixed(lb.description_length(), 3), 12) << fixed(rel, 1) << "%   "
        << fixed(100.0 * la.oov_rate(), 3) << " -> " << fixed(100.0 * lb.oov_rate(), 3)
        << "\n";
  }
  out << "\nscript fractions [%]\n";
  for (const auto& [script, f] : a.script_fractions) {
    row(script, 100.0 * f, 100.0 * b.script_fractions.at(script), 2);
  }
  return out.str();
}

}  // namespace mvocab
