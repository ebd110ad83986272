#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mvocab {

// Sentences of one language, one per line of the source file. Sentences are
// stored raw (not normalized) and never contain U+2581.
class LanguageCorpus {
 public:
  LanguageCorpus() = default;
  LanguageCorpus(std::string language, std::vector<std::string> sentences);

  const std::string& language() const { return language_; }
  const std::vector<std::string>& sentences() const { return sentences_; }
  std::size_t sentence_count() const { return sentences_.size(); }
  bool empty() const { return sentences_.empty(); }

 private:
  std::string language_;
  std::vector<std::string> sentences_;
};

// Reads a UTF-8 file, one sentence per line. Blank (whitespace-only) lines are
// dropped, a trailing '\r' is stripped, and any literal U+2581 is replaced by
// a space. Invalid UTF-8 is an IO error naming the line number.
LanguageCorpus load_corpus(const std::filesystem::path& path,
                           const std::string& language,
                           std::optional<std::size_t> max_sentences = {});

// NFKC, then whitespace runs collapse to a single U+2581 with one leading
// U+2581 in front of the first word. Leading/trailing whitespace is dropped,
// so whitespace-only input normalizes to "". Idempotent.
std::string normalize(std::string_view text);

// Inverse of the boundary substitution: U+2581 becomes ' ' and a single
// leading space is removed.
std::string denormalize(std::string_view normalized);

std::vector<std::string> normalized_sentences(const LanguageCorpus& corpus);

struct SamplingDistribution {
  std::map<std::string, double> weights;
  double smoothing_exponent = 0.7;

  double weight(const std::string& language) const;
};

inline constexpr double kDefaultSmoothingExponent = 0.7;

// weight(l) = p_l^a / sum_l' p_l'^a with p_l = n_l / sum n_l'.
SamplingDistribution sampling_distribution(
    const std::vector<std::pair<std::string, std::size_t>>& sizes,
    double smoothing_exponent = kDefaultSmoothingExponent);
SamplingDistribution sampling_distribution(
    std::span<const LanguageCorpus> corpora,
    double smoothing_exponent = kDefaultSmoothingExponent);

// Character frequencies of normalized text, boundary marker excluded.
using CharCounts = std::map<char32_t, std::size_t>;
CharCounts count_chars(std::span<const std::string> normalized);

inline constexpr double kDefaultCharacterCoverage = 0.9995;

// Smallest frequency-ordered (ties by code point) prefix of characters whose
// mass reaches `coverage`, plus U+2581. Returned in ascending code point order.
std::vector<char32_t> coverage_alphabet(const CharCounts& counts,
                                        double coverage);
std::vector<char32_t> coverage_alphabet(std::span<const LanguageCorpus> corpora,
                                        double coverage);
std::vector<char32_t> coverage_alphabet(const LanguageCorpus& corpus,
                                        double coverage);

struct ManifestEntry {
  std::string language;
  std::filesystem::path path;
  std::optional<std::size_t> max_sentences;
};

// Manifest lines: "<code> <path> [max_sentences]", '#' starts a comment.
// Relative paths resolve against the manifest's directory.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path,
                    std::span<const ManifestEntry> entries);

std::vector<LanguageCorpus> load_corpora(std::span<const ManifestEntry> entries);

// Concatenates corpora in the given order under a synthetic language code.
LanguageCorpus pool_corpora(std::span<const LanguageCorpus> corpora,
                            const std::string& language);

}  // namespace mvocab
