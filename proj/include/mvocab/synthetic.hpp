#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvocab/corpus.hpp"

namespace mvocab {

// Toy languages for experiments. Languages of one family share a root
// lexicon and script; families share nothing but the space.
enum class SyntheticFamily { kLatin, kCyrillic, kCjk };

struct SyntheticLanguage {
  std::string code;
  SyntheticFamily family = SyntheticFamily::kLatin;
  std::size_t sentences = 10000;
};

struct SyntheticOptions {
  std::vector<SyntheticLanguage> languages;
  std::uint64_t seed = 7;
};

// 3 high-resource Latin-like (1.5x sentences), 2 Cyrillic-like (0.8x) and
// 1 low-resource CJK-like (0.4x) language.
SyntheticOptions six_language_preset(std::size_t sentences = 10000, std::uint64_t seed = 7);

// 3 Latin-like and 3 CJK-like languages.
SyntheticOptions latin_cjk_preset(std::size_t sentences = 10000, std::uint64_t seed = 7);

std::vector<LanguageCorpus> generate_synthetic(const SyntheticOptions& options);

// Writes <dir>/<code>.txt per language and <dir>/manifest.txt; returns the
// manifest path.
std::filesystem::path write_synthetic(const std::filesystem::path& dir,
                                      const SyntheticOptions& options);

}  // namespace mvocab
