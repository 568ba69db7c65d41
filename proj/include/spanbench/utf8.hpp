#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace spanbench::utf8 {

// Decodes `bytes` as UTF-8. Without `lossy`, invalid input throws DecodeError;
// with it, each maximal invalid subsequence becomes one U+FFFD.
std::string decode(std::string_view bytes, bool lossy = false);

// Number of Unicode scalar values in valid UTF-8.
std::size_t scalar_count(std::string_view text);

// Byte offset of the scalar at `scalar_index` (== text.size() when the index
// equals the scalar count). Throws OutOfBounds past the end.
std::size_t byte_offset(std::string_view text, std::size_t scalar_index);

// Substring [start, end) in scalar offsets. Throws OutOfBounds on bad bounds.
std::string_view slice(std::string_view text, std::size_t start, std::size_t end);

// Unicode White_Space property (the fixed 25-code-point set).
bool is_whitespace(char32_t cp);

struct Scalar {
  char32_t cp;
  std::size_t byte_offset;
};

// All scalars of valid UTF-8 text with their byte offsets; the scalar offset
// of scalars[i] is i.
std::vector<Scalar> scalars(std::string_view text);

}  // namespace spanbench::utf8
