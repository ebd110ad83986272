#include "mvocab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "mvocab/error.hpp"
#include "mvocab/utf8.hpp"
#include "mvocab/vocabulary.hpp"

namespace mvocab {

namespace {

constexpr std::size_t kFamilyRoots = 1500;
constexpr std::size_t kOwnRoots = 500;
constexpr std::size_t kPrefixes = 6;
constexpr std::size_t kSuffixes = 12;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(uniform() * n); }
  bool chance(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

class Zipf {
 public:
  Zipf(std::size_t n, double s) : cdf_(n) {
    double acc = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      acc += 1.0 / std::pow(static_cast<double>(r + 1), s);
      cdf_[r] = acc;
    }
    for (auto& c : cdf_) c /= acc;
  }
  std::size_t draw(Rng& rng) const {
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), rng.uniform());
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

struct Letters {
  std::vector<std::u32string> consonants;
  std::vector<std::u32string> vowels;
};

Letters latin_letters() {
  Letters l;
  for (char32_t c : std::u32string(U"bcdfghjklmnprstvz")) l.consonants.push_back({c});
  for (char32_t c : std::u32string(U"aeiou")) l.vowels.push_back({c});
  return l;
}

Letters cyrillic_letters() {
  Letters l;
  for (char32_t c : std::u32string(U"бвгджзклмнпрстфхцчш")) l.consonants.push_back({c});
  for (char32_t c : std::u32string(U"аеиоуыя")) l.vowels.push_back({c});
  return l;
}

std::u32string make_root(const Letters& letters, Rng& rng) {
  const std::size_t syllables = 1 + rng.below(3);
  std::u32string root;
  for (std::size_t s = 0; s < syllables; ++s) {
    root += letters.consonants[rng.below(letters.consonants.size())];
    root += letters.vowels[rng.below(letters.vowels.size())];
    if (rng.chance(0.3)) root += letters.consonants[rng.below(letters.consonants.size())];
  }
  return root;
}

// Per-family shared material.
struct Family {
  Letters letters;
  std::vector<std::u32string> roots;
  std::vector<char32_t> extra;  // rarer letters handed out to languages
};

Family make_family(SyntheticFamily kind, std::uint64_t seed) {
  Rng rng(seed * 1000003 + static_cast<std::uint64_t>(kind));
  Family f;
  if (kind == SyntheticFamily::kLatin) {
    f.letters = latin_letters();
    f.extra = {U'w', U'y', U'q', U'x', U'é', U'è', U'ü', U'ö', U'ñ', U'ç', U'å', U'ø',
               U'ß', U'ł', U'ğ', U'ş'};
  } else {
    f.letters = cyrillic_letters();
    f.extra = {U'й', U'щ', U'ь', U'ъ', U'э', U'ю', U'ё', U'ї', U'є', U'і', U'ґ', U'ў'};
  }
  std::map<std::u32string, bool> seen;
  while (f.roots.size() < kFamilyRoots) {
    auto r = make_root(f.letters, rng);
    if (seen.emplace(r, true).second) f.roots.push_back(std::move(r));
  }
  return f;
}

std::u32string make_affix(const Letters& letters, Rng& rng, bool leading_consonant) {
  std::u32string a;
  if (leading_consonant) a += letters.consonants[rng.below(letters.consonants.size())];
  a += letters.vowels[rng.below(letters.vowels.size())];
  if (rng.chance(0.6)) a += letters.consonants[rng.below(letters.consonants.size())];
  return a;
}

std::vector<std::string> alphabetic_language(const Family& family, std::size_t index,
                                             std::size_t sentences, Rng& rng) {
  // Orthography: a few extra letters replace letters with small probability,
  // each language gets its own, plus a rare tail of the others.
  std::vector<char32_t> own;
  for (std::size_t i = 0; i < 3; ++i) {
    own.push_back(family.extra[(index * 3 + i) % family.extra.size()]);
  }

  std::vector<std::u32string> prefixes;
  for (std::size_t i = 0; i < kPrefixes; ++i) prefixes.push_back(make_affix(family.letters, rng, true));
  std::vector<std::u32string> suffixes;
  for (std::size_t i = 0; i < kSuffixes; ++i) suffixes.push_back(make_affix(family.letters, rng, false));

  std::vector<std::u32string> lexicon;
  for (const auto& root : family.roots) {
    if (!rng.chance(0.7)) continue;
    std::u32string w = root;
    for (auto& c : w) {
      if (rng.chance(0.04)) c = own[rng.below(own.size())];
    }
    lexicon.push_back(std::move(w));
  }
  for (std::size_t i = 0; i < kOwnRoots; ++i) lexicon.push_back(make_root(family.letters, rng));
  // Local shuffle: frequency ranks differ per language but stay correlated.
  for (std::size_t i = 0; i + 1 < lexicon.size(); ++i) {
    const std::size_t j = std::min(lexicon.size() - 1, i + rng.below(40));
    std::swap(lexicon[i], lexicon[j]);
  }

  const Zipf words(lexicon.size(), 1.0);
  const Zipf prefix_pick(prefixes.size(), 1.0);
  const Zipf suffix_pick(suffixes.size(), 1.0);
  std::vector<std::string> out;
  out.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    const std::size_t n = 6 + rng.below(9);
    std::u32string sentence;
    for (std::size_t w = 0; w < n; ++w) {
      if (w) sentence += U' ';
      if (rng.chance(0.15)) sentence += prefixes[prefix_pick.draw(rng)];
      sentence += lexicon[words.draw(rng)];
      if (rng.chance(0.08)) sentence += lexicon[words.draw(rng)];
      if (rng.chance(0.6)) sentence += suffixes[suffix_pick.draw(rng)];
      if (rng.chance(0.2)) sentence += suffixes[suffix_pick.draw(rng)];
      if (rng.chance(0.003)) sentence += family.extra[rng.below(family.extra.size())];
    }
    out.push_back(utf8::encode(std::u32string_view(sentence)));
  }
  return out;
}

std::vector<std::string> cjk_language(std::size_t index, std::size_t sentences,
                                      std::uint64_t seed, Rng& rng) {
  // Character inventory shared by the family; each language draws it in its
  // own frequency order.
  constexpr std::size_t kChars = 1200;
  std::vector<char32_t> chars(kChars);
  for (std::size_t i = 0; i < kChars; ++i) chars[i] = static_cast<char32_t>(0x4E00 + 7 * i);
  Rng order(seed * 7919 + 17);
  for (std::size_t i = kChars - 1; i > 0; --i) std::swap(chars[i], chars[order.below(i + 1)]);
  for (std::size_t i = 0; i + 1 < kChars; ++i) {
    const std::size_t j = std::min(kChars - 1, i + rng.below(20 + 10 * index));
    std::swap(chars[i], chars[j]);
  }

  const Zipf char_pick(kChars, 1.0);
  std::vector<std::u32string> lexicon;
  for (std::size_t i = 0; i < 3000; ++i) {
    const std::size_t len = 1 + rng.below(3);
    std::u32string w;
    for (std::size_t c = 0; c < len; ++c) w += chars[char_pick.draw(rng)];
    lexicon.push_back(std::move(w));
  }
  const Zipf words(lexicon.size(), 1.1);
  std::vector<std::string> out;
  out.reserve(sentences);
  for (std::size_t s = 0; s < sentences; ++s) {
    // No spaces, like written Chinese: clauses are joined by an ideographic
    // comma and the whole sentence is one segment.
    const std::size_t phrases = 2 + rng.below(3);
    std::u32string sentence;
    for (std::size_t p = 0; p < phrases; ++p) {
      if (p) sentence += U'、';
      const std::size_t n = 1 + rng.below(3);
      for (std::size_t w = 0; w < n; ++w) sentence += lexicon[words.draw(rng)];
    }
    sentence += U'。';
    out.push_back(utf8::encode(std::u32string_view(sentence)));
  }
  return out;
}

}  // namespace

SyntheticOptions six_language_preset(std::size_t sentences, std::uint64_t seed) {
  SyntheticOptions o;
  o.seed = seed;
  const std::size_t high = sentences * 3 / 2;
  const std::size_t mid = sentences * 4 / 5;
  const std::size_t low = sentences * 2 / 5;
  o.languages = {{"la1", SyntheticFamily::kLatin, high},
                 {"la2", SyntheticFamily::kLatin, high},
                 {"la3", SyntheticFamily::kLatin, high},
                 {"cy1", SyntheticFamily::kCyrillic, mid},
                 {"cy2", SyntheticFamily::kCyrillic, mid},
                 {"zh1", SyntheticFamily::kCjk, low}};
  return o;
}

SyntheticOptions latin_cjk_preset(std::size_t sentences, std::uint64_t seed) {
  SyntheticOptions o;
  o.seed = seed;
  o.languages = {{"la1", SyntheticFamily::kLatin, sentences},
                 {"la2", SyntheticFamily::kLatin, sentences},
                 {"la3", SyntheticFamily::kLatin, sentences},
                 {"zh1", SyntheticFamily::kCjk, sentences},
                 {"zh2", SyntheticFamily::kCjk, sentences},
                 {"zh3", SyntheticFamily::kCjk, sentences}};
  return o;
}

std::vector<LanguageCorpus> generate_synthetic(const SyntheticOptions& options) {
  std::map<SyntheticFamily, Family> families;
  std::map<SyntheticFamily, std::size_t> members;
  std::vector<LanguageCorpus> out;
  for (std::size_t i = 0; i < options.languages.size(); ++i) {
    const auto& lang = options.languages[i];
    Rng rng(options.seed * 6364136223846793005ULL + i + 1);
    const std::size_t index = members[lang.family]++;
    std::vector<std::string> sentences;
    if (lang.family == SyntheticFamily::kCjk) {
      sentences = cjk_language(index, lang.sentences, options.seed, rng);
    } else {
      auto it = families.find(lang.family);
      if (it == families.end()) {
        it = families.emplace(lang.family, make_family(lang.family, options.seed)).first;
      }
      sentences = alphabetic_language(it->second, index, lang.sentences, rng);
    }
    out.emplace_back(lang.code, std::move(sentences));
  }
  return out;
}

std::filesystem::path write_synthetic(const std::filesystem::path& dir,
                                      const SyntheticOptions& options) {
  std::filesystem::create_directories(dir);
  const auto corpora = generate_synthetic(options);
  std::vector<ManifestEntry> entries;
  for (const auto& c : corpora) {
    std::string text;
    for (const auto& s : c.sentences()) {
      text += s;
      text += '\n';
    }
    write_file_atomic(dir / (c.language() + ".txt"), text);
    entries.push_back({c.language(), c.language() + ".txt", std::nullopt});
  }
  const auto manifest = dir / "manifest.txt";
  write_manifest(manifest, entries);
  return manifest;
}

}  // namespace mvocab
