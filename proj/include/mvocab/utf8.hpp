#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mvocab::utf8 {

// Word boundary marker (U+2581 LOWER ONE EIGHTH BLOCK).
inline constexpr char32_t kBoundary = U'▁';
inline constexpr std::string_view kBoundaryStr = "\xe2\x96\x81";

// Byte offset of the first malformed sequence, or nullopt when `text` is
// well-formed UTF-8 (no overlongs, no surrogates, max U+10FFFF).
std::optional<std::size_t> find_invalid(std::string_view text);

inline bool is_valid(std::string_view text) { return !find_invalid(text); }

// Decodes well-formed UTF-8. Malformed bytes decode as U+FFFD.
std::u32string decode(std::string_view text);

void append(std::string& out, char32_t cp);
std::string encode(char32_t cp);
std::string encode(std::u32string_view text);

// Byte length of the sequence starting with lead byte `c` (1 for invalid).
inline std::size_t sequence_length(unsigned char c) {
  if (c < 0x80) return 1;
  if ((c >> 5) == 0x6) return 2;
  if ((c >> 4) == 0xE) return 3;
  if ((c >> 3) == 0x1E) return 4;
  return 1;
}

// Byte offsets of every code point start plus a final entry equal to
// text.size(), so code point i spans [offsets[i], offsets[i+1]).
std::vector<std::size_t> codepoint_offsets(std::string_view text);

std::size_t codepoint_count(std::string_view text);

}  // namespace mvocab::utf8
