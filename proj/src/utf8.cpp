#include "anchormt/utf8.hpp"

namespace anchormt {

static int utf8_len(unsigned char b) {
  if (b < 0x80) return 1;
  if ((b & 0xE0) == 0xC0) return 2;
  if ((b & 0xF0) == 0xE0) return 3;
  if ((b & 0xF8) == 0xF0) return 4;
  return -1;
}

bool utf8_codepoints(std::string_view s, std::vector<std::string>& out) {
  size_t i = 0;
  while (i < s.size()) {
    int n = utf8_len(static_cast<unsigned char>(s[i]));
    if (n < 0 || i + n > s.size()) return false;
    for (int k = 1; k < n; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    out.emplace_back(s.substr(i, n));
    i += n;
  }
  return true;
}

bool utf8_valid(std::string_view s) {
  size_t i = 0;
  while (i < s.size()) {
    int n = utf8_len(static_cast<unsigned char>(s[i]));
    if (n < 0 || i + n > s.size()) return false;
    for (int k = 1; k < n; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += n;
  }
  return true;
}

bool is_unicode_space(std::string_view cp) {
  if (cp.size() == 1) {
    char c = cp[0];
    return c == ' ' || c == '\t' || c == '\r' || c == '\v' || c == '\f';
  }
  // U+00A0, U+2000..U+200A, U+2028, U+2029, U+202F, U+3000
  if (cp == " " || cp == " " || cp == " " || cp == " " || cp == "　")
    return true;
  if (cp.size() == 3 && static_cast<unsigned char>(cp[0]) == 0xE2 &&
      static_cast<unsigned char>(cp[1]) == 0x80) {
    unsigned char b = static_cast<unsigned char>(cp[2]);
    return b >= 0x80 && b <= 0x8A;
  }
  return false;
}

}  // namespace anchormt
