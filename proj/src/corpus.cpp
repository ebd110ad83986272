#include "mvocab/corpus.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mvocab/error.hpp"
#include "mvocab/utf8.hpp"

namespace mvocab {

namespace {

bool is_separator(char32_t cp) {
  return cp == utf8::kBoundary || u_isUWhiteSpace(static_cast<UChar32>(cp));
}

bool is_ascii(std::string_view text) {
  return std::all_of(text.begin(), text.end(),
                     [](char c) { return static_cast<unsigned char>(c) < 0x80; });
}

std::string nfkc(std::string_view text) {
  if (is_ascii(text)) return std::string(text);
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw_io("ICU NFKC normalizer unavailable");
  const icu::UnicodeString source = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  const icu::UnicodeString result = normalizer->normalize(source, status);
  if (U_FAILURE(status)) throw_io("NFKC normalization failed");
  std::string out;
  result.toUTF8String(out);
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

LanguageCorpus::LanguageCorpus(std::string language,
                               std::vector<std::string> sentences)
    : language_(std::move(language)), sentences_(std::move(sentences)) {}

LanguageCorpus load_corpus(const std::filesystem::path& path,
                           const std::string& language,
                           std::optional<std::size_t> max_sentences) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open corpus file: " + path.string());

  std::vector<std::string> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (auto bad = utf8::find_invalid(line)) {
      throw_io(path.string() + ":" + std::to_string(line_no) +
               ": invalid UTF-8 at byte " + std::to_string(*bad));
    }
    std::size_t pos = 0;
    while ((pos = line.find(utf8::kBoundaryStr, pos)) != std::string::npos) {
      line.replace(pos, utf8::kBoundaryStr.size(), " ");
      pos += 1;
    }
    if (normalize(line).empty()) continue;
    sentences.push_back(std::move(line));
    if (max_sentences && sentences.size() >= *max_sentences) break;
  }
  if (in.bad()) throw_io("read failure on corpus file: " + path.string());
  return LanguageCorpus(language, std::move(sentences));
}

std::string normalize(std::string_view text) {
  const std::u32string cps = utf8::decode(nfkc(text));
  std::string out;
  out.reserve(text.size() + 8);
  bool pending_separator = true;
  for (char32_t cp : cps) {
    if (is_separator(cp)) {
      pending_separator = true;
      continue;
    }
    if (pending_separator) {
      out.append(utf8::kBoundaryStr);
      pending_separator = false;
    }
    utf8::append(out, cp);
  }
  return out;
}

std::string denormalize(std::string_view normalized) {
  std::string out;
  out.reserve(normalized.size());
  std::size_t i = 0;
  while (i < normalized.size()) {
    if (normalized.substr(i, utf8::kBoundaryStr.size()) == utf8::kBoundaryStr) {
      out.push_back(' ');
      i += utf8::kBoundaryStr.size();
    } else {
      out.push_back(normalized[i++]);
    }
  }
  if (!out.empty() && out.front() == ' ') out.erase(0, 1);
  return out;
}

std::vector<std::string> normalized_sentences(const LanguageCorpus& corpus) {
  std::vector<std::string> out;
  out.reserve(corpus.sentence_count());
  for (const auto& s : corpus.sentences()) out.push_back(normalize(s));
  return out;
}

double SamplingDistribution::weight(const std::string& language) const {
  auto it = weights.find(language);
  return it == weights.end() ? 0.0 : it->second;
}

SamplingDistribution sampling_distribution(
    const std::vector<std::pair<std::string, std::size_t>>& sizes,
    double smoothing_exponent) {
  if (!(smoothing_exponent > 0.0 && smoothing_exponent <= 1.0)) {
    throw_usage("smoothing exponent must be in (0, 1]");
  }
  double total = 0.0;
  for (const auto& [lang, n] : sizes) total += static_cast<double>(n);
  if (total <= 0.0) throw_usage("sampling distribution needs a non-empty corpus");

  SamplingDistribution dist;
  dist.smoothing_exponent = smoothing_exponent;
  double norm = 0.0;
  for (const auto& [lang, n] : sizes) {
    const double p = static_cast<double>(n) / total;
    const double w = std::pow(p, smoothing_exponent);
    dist.weights[lang] += w;
    norm += w;
  }
  for (auto& [lang, w] : dist.weights) w /= norm;
  return dist;
}

SamplingDistribution sampling_distribution(
    std::span<const LanguageCorpus> corpora, double smoothing_exponent) {
  std::vector<std::pair<std::string, std::size_t>> sizes;
  sizes.reserve(corpora.size());
  for (const auto& c : corpora) sizes.emplace_back(c.language(), c.sentence_count());
  return sampling_distribution(sizes, smoothing_exponent);
}

CharCounts count_chars(std::span<const std::string> normalized) {
  CharCounts counts;
  for (const auto& s : normalized) {
    for (char32_t cp : utf8::decode(s)) {
      if (cp != utf8::kBoundary) ++counts[cp];
    }
  }
  return counts;
}

std::vector<char32_t> coverage_alphabet(const CharCounts& counts,
                                        double coverage) {
  if (!(coverage > 0.0 && coverage <= 1.0)) {
    throw_usage("character coverage must be in (0, 1]");
  }
  std::vector<std::pair<char32_t, std::size_t>> ordered(counts.begin(),
                                                        counts.end());
  std::size_t total = 0;
  for (const auto& [cp, n] : ordered) total += n;
  if (total == 0) throw_usage("coverage alphabet of an empty corpus");

  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<char32_t> alphabet{utf8::kBoundary};
  const double needed = coverage * static_cast<double>(total);
  std::size_t cumulative = 0;
  for (const auto& [cp, n] : ordered) {
    if (static_cast<double>(cumulative) >= needed) break;
    alphabet.push_back(cp);
    cumulative += n;
  }
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
  return alphabet;
}

std::vector<char32_t> coverage_alphabet(std::span<const LanguageCorpus> corpora,
                                        double coverage) {
  CharCounts counts;
  for (const auto& corpus : corpora) {
    for (const auto& [cp, n] : count_chars(normalized_sentences(corpus))) {
      counts[cp] += n;
    }
  }
  return coverage_alphabet(counts, coverage);
}

std::vector<char32_t> coverage_alphabet(const LanguageCorpus& corpus,
                                        double coverage) {
  return coverage_alphabet(std::span<const LanguageCorpus>(&corpus, 1), coverage);
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open manifest: " + path.string());
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string_view body = trim(line);
    if (body.empty()) continue;
    std::istringstream fields{std::string(body)};
    ManifestEntry entry;
    std::string file;
    fields >> entry.language >> file;
    if (entry.language.empty() || file.empty()) {
      throw_usage(path.string() + ":" + std::to_string(line_no) +
                  ": expected '<language> <path> [max_sentences]'");
    }
    std::string cap;
    if (fields >> cap) {
      try {
        std::size_t used = 0;
        const unsigned long long value = std::stoull(cap, &used);
        if (used != cap.size()) throw std::invalid_argument(cap);
        entry.max_sentences = static_cast<std::size_t>(value);
      } catch (const std::exception&) {
        throw_usage(path.string() + ":" + std::to_string(line_no) +
                    ": bad max_sentences '" + cap + "'");
      }
    }
    entry.path = std::filesystem::path(file).is_absolute() ? std::filesystem::path(file)
                                                           : base / file;
    for (const auto& prior : entries) {
      if (prior.language == entry.language) {
        throw_usage(path.string() + ": duplicate language '" + entry.language + "'");
      }
    }
    entries.push_back(std::move(entry));
  }
  if (entries.empty()) throw_usage("manifest has no entries: " + path.string());
  return entries;
}

void write_manifest(const std::filesystem::path& path,
                    std::span<const ManifestEntry> entries) {
  std::ofstream out(path);
  if (!out) throw_io("cannot write manifest: " + path.string());
  for (const auto& e : entries) {
    out << e.language << ' ' << e.path.string();
    if (e.max_sentences) out << ' ' << *e.max_sentences;
    out << '\n';
  }
}

std::vector<LanguageCorpus> load_corpora(std::span<const ManifestEntry> entries) {
  std::vector<LanguageCorpus> corpora;
  corpora.reserve(entries.size());
  for (const auto& e : entries) {
    corpora.push_back(load_corpus(e.path, e.language, e.max_sentences));
  }
  return corpora;
}

LanguageCorpus pool_corpora(std::span<const LanguageCorpus> corpora,
                            const std::string& language) {
  std::vector<std::string> pooled;
  std::size_t total = 0;
  for (const auto& c : corpora) total += c.sentence_count();
  pooled.reserve(total);
  for (const auto& c : corpora) {
    pooled.insert(pooled.end(), c.sentences().begin(), c.sentences().end());
  }
  return LanguageCorpus(language, std::move(pooled));
}

}  // namespace mvocab
