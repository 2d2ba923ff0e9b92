#include "propspan/corpus/utf8.hpp"

#include <array>
#include <utility>

#include "propspan/error.hpp"

namespace propspan::corpus::utf8 {

namespace {

[[noreturn]] void malformed(std::string_view what, std::size_t byte) {
  throw FormatError("invalid UTF-8 in " + std::string(what) + " at byte " + std::to_string(byte));
}

}  // namespace

std::u32string decode(std::string_view bytes, std::string_view what) {
  std::u32string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  while (i < bytes.size()) {
    const auto lead = static_cast<unsigned char>(bytes[i]);
    std::size_t extra = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if (lead < 0x80) {
      out.push_back(lead);
      ++i;
      continue;
    } else if ((lead & 0xE0) == 0xC0) {
      extra = 1;
      cp = lead & 0x1F;
      min = 0x80;
    } else if ((lead & 0xF0) == 0xE0) {
      extra = 2;
      cp = lead & 0x0F;
      min = 0x800;
    } else if ((lead & 0xF8) == 0xF0) {
      extra = 3;
      cp = lead & 0x07;
      min = 0x10000;
    } else {
      malformed(what, i);
    }
    if (i + extra >= bytes.size()) malformed(what, i);
    for (std::size_t k = 1; k <= extra; ++k) {
      const auto cont = static_cast<unsigned char>(bytes[i + k]);
      if ((cont & 0xC0) != 0x80) malformed(what, i + k);
      cp = (cp << 6) | (cont & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) malformed(what, i);
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode(std::u32string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else if (c < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else if (c < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (c >> 12)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (c >> 18)));
      out.push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3F)));
    }
  }
  return out;
}

bool is_space(char32_t c) {
  if ((c >= 0x09 && c <= 0x0D) || c == 0x20) return true;
  switch (c) {
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return c >= 0x2000 && c <= 0x200A;
  }
}

bool is_alnum(char32_t c) {
  if (c < 0x80) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
  }
  static constexpr std::array<std::pair<char32_t, char32_t>, 12> kNonWord{{
      {0x0080, 0x00BF},    // C1 controls, Latin-1 punctuation and symbols
      {0x00D7, 0x00D7},    // multiplication sign
      {0x00F7, 0x00F7},    // division sign
      {0x2000, 0x206F},    // general punctuation
      {0x20A0, 0x20CF},    // currency
      {0x2190, 0x2BFF},    // arrows, math operators, technical, shapes, dingbats
      {0x3000, 0x303F},    // CJK symbols and punctuation
      {0xFE30, 0xFE6F},    // CJK compatibility and small forms
      {0xFF00, 0xFF0F},    // fullwidth punctuation
      {0xFF1A, 0xFF20},
      {0xFF3B, 0xFF40},
      {0x1F000, 0x1FAFF},  // emoji and pictographs
  }};
  for (const auto& [lo, hi] : kNonWord) {
    if (c >= lo && c <= hi) return false;
  }
  return !(c >= 0xFF5B && c <= 0xFF65);
}

}  // namespace propspan::corpus::utf8
