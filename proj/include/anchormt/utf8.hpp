#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace anchormt {

// Splits a UTF-8 string into code point substrings. Returns false on a
// malformed byte sequence (out is left with everything decoded so far).
bool utf8_codepoints(std::string_view s, std::vector<std::string>& out);

bool utf8_valid(std::string_view s);

// True for space, tab, CR and the common Unicode space separators.
bool is_unicode_space(std::string_view codepoint);

}  // namespace anchormt
