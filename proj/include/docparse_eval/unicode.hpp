#pragma once

#include <string>
#include <string_view>

namespace docparse_eval {

// Decodes UTF-8 into code points. Malformed sequences decode to U+FFFD.
std::u32string utf8_to_u32(std::string_view text);

std::string u32_to_utf8(std::u32string_view text);

// Number of code points in a UTF-8 string (malformed bytes count as one each).
std::size_t utf8_length(std::string_view text);

bool is_space(char32_t c);

std::u32string trim(std::u32string_view s);
std::string trim(std::string_view s);

// Collapses every whitespace run to a single ASCII space and trims the ends.
std::u32string collapse_whitespace(std::u32string_view s);

char32_t ascii_lower(char32_t c);

// Case-insensitive ASCII prefix test at `pos`.
bool starts_with_ci(std::u32string_view s, std::size_t pos, std::u32string_view prefix);

}  // namespace docparse_eval
