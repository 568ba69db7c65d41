#include "spanbench/utf8.hpp"

#include "spanbench/errors.hpp"

namespace spanbench::utf8 {

namespace {

constexpr std::string_view kReplacement = "\xEF\xBF\xBD";  // U+FFFD

// Decodes one scalar starting at `i`. Returns false on an invalid sequence,
// in which case `next` is the resume position after the maximal invalid
// subsequence (WHATWG behaviour: consume at least one byte, plus any
// continuation bytes that formed a truncated but otherwise valid prefix).
bool decode_one(std::string_view s, std::size_t i, char32_t& cp, std::size_t& next) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    cp = b0;
    next = i + 1;
    return true;
  }
  int len;
  char32_t acc;
  char32_t min_cp;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    acc = b0 & 0x1F;
    min_cp = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    acc = b0 & 0x0F;
    min_cp = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    acc = b0 & 0x07;
    min_cp = 0x10000;
  } else {
    next = i + 1;
    return false;
  }
  std::size_t j = i + 1;
  for (int k = 1; k < len; ++k, ++j) {
    if (j >= s.size() || (static_cast<unsigned char>(s[j]) & 0xC0) != 0x80) {
      next = j;
      return false;
    }
    acc = (acc << 6) | (static_cast<unsigned char>(s[j]) & 0x3F);
  }
  if (acc < min_cp || acc > 0x10FFFF || (acc >= 0xD800 && acc <= 0xDFFF)) {
    next = i + 1;  // overlong/surrogate/out of range: resync at next byte
    return false;
  }
  cp = acc;
  next = j;
  return true;
}

}  // namespace

std::string decode(std::string_view bytes, bool lossy) {
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    char32_t cp;
    std::size_t next;
    if (decode_one(bytes, i, cp, next)) {
      out.append(bytes.substr(i, next - i));
    } else if (lossy) {
      out.append(kReplacement);
    } else {
      throw DecodeError("invalid UTF-8 at byte offset " + std::to_string(i));
    }
    i = next;
  }
  return out;
}

std::size_t scalar_count(std::string_view text) {
  std::size_t n = 0;
  for (char c : text) {
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::size_t byte_offset(std::string_view text, std::size_t scalar_index) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (seen == scalar_index) return i;
      ++seen;
    }
  }
  if (seen == scalar_index) return text.size();
  throw OutOfBounds("scalar index " + std::to_string(scalar_index) +
                    " past end of text of length " + std::to_string(seen));
}

std::string_view slice(std::string_view text, std::size_t start, std::size_t end) {
  if (start > end) throw OutOfBounds("slice start exceeds end");
  const std::size_t b0 = byte_offset(text, start);
  const std::size_t b1 = byte_offset(text, end);
  return text.substr(b0, b1 - b0);
}

bool is_whitespace(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D:
    case 0x20: case 0x85: case 0xA0: case 0x1680:
    case 0x2000: case 0x2001: case 0x2002: case 0x2003: case 0x2004:
    case 0x2005: case 0x2006: case 0x2007: case 0x2008: case 0x2009:
    case 0x200A: case 0x2028: case 0x2029: case 0x202F: case 0x205F:
    case 0x3000:
      return true;
    default:
      return false;
  }
}

std::vector<Scalar> scalars(std::string_view text) {
  std::vector<Scalar> out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    char32_t cp;
    std::size_t next;
    if (!decode_one(text, i, cp, next)) {
      throw DecodeError("invalid UTF-8 at byte offset " + std::to_string(i));
    }
    out.push_back({cp, i});
    i = next;
  }
  return out;
}

}  // namespace spanbench::utf8
