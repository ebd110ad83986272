#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mvocab/corpus.hpp"
#include "mvocab/vocabulary.hpp"

namespace mvocab {

// Frequencies of the pieces a vocabulary emits on one corpus, normalized.
// Indexed like the vocabulary (UNK included).
struct SubwordDistribution {
  std::string vocab_ref;  // Vocabulary::identity()
  std::vector<double> probs;
};

SubwordDistribution empirical_distribution(const Vocabulary& vocab,
                                           const LanguageCorpus& corpus);

// W1 on the line through the vocabulary's canonical order with unit spacing:
// sum_i |CDF_p(i) - CDF_q(i)|.
double wasserstein1(std::span<const double> p, std::span<const double> q);
double wasserstein1(const SubwordDistribution& p, const SubwordDistribution& q);

struct LanguageMeasure {
  std::string language;
  std::size_t sentences = 0;
  std::size_t pieces = 0;
  std::size_t unk = 0;
  double weight = 0.0;  // sampling probability

  double description_length() const;
  double oov_rate() const;
};

struct CorpusMeasure {
  std::vector<LanguageMeasure> languages;
  // Expected pieces per sentence under the sampling distribution.
  double description_length = 0.0;
  // Expected UNK pieces over expected pieces, same sampling.
  double oov_rate = 0.0;
};

CorpusMeasure measure(const Vocabulary& vocab, std::span<const LanguageCorpus> corpora,
                      const SamplingDistribution& sampling, std::size_t jobs = 1);

double description_length(const Vocabulary& vocab, std::span<const LanguageCorpus> corpora,
                          const SamplingDistribution& sampling);
double oov_rate(const Vocabulary& vocab, std::span<const LanguageCorpus> corpora,
                const SamplingDistribution& sampling);

// Unicode block tables, versioned so reports can be compared across builds.
inline constexpr std::string_view kScriptTableVersion = "blocks-2024.1";

enum class ScriptClass {
  kLatin,
  kCyrillic,
  kGreek,
  kArabic,
  kHebrew,
  kDevanagari,
  kThai,
  kHangul,
  kKana,
  kHan,
  kCjk,  // Han, Kana, Hangul and CJK punctuation
};

std::string_view to_string(ScriptClass script);
ScriptClass parse_script(std::string_view name);
const std::vector<ScriptClass>& all_scripts();

bool in_script(char32_t cp, ScriptClass script);

// Fraction of non-special pieces with at least one character of the class.
double script_fraction(const Vocabulary& vocab, ScriptClass script);

struct AnalysisReport {
  std::string vocab_ref;
  std::size_t vocab_size = 0;
  CorpusMeasure corpus;
  std::map<std::string, double> script_fractions;
  std::vector<std::string> w1_languages;
  std::vector<std::vector<double>> w1_matrix;

  std::string to_json() const;
  std::string to_text() const;
};

AnalysisReport analyze(const Vocabulary& vocab, std::span<const LanguageCorpus> corpora,
                       const SamplingDistribution& sampling, std::size_t jobs = 1);

struct ComparisonReport {
  AnalysisReport a;
  AnalysisReport b;

  std::string to_json() const;
  std::string to_text() const;
};

ComparisonReport compare(const Vocabulary& vocab_a, const Vocabulary& vocab_b,
                         std::span<const LanguageCorpus> corpora,
                         const SamplingDistribution& sampling, std::size_t jobs = 1);

}  // namespace mvocab
