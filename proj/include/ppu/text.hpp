// UTF-8 helpers. All character offsets in this project count Unicode code
// points, not bytes.

#pragma once

#include <string>
#include <string_view>

namespace ppu {

// Invalid sequences decode to U+FFFD.
std::u32string utf8_decode(std::string_view s);
std::string utf8_encode(std::u32string_view s);
std::string utf8_encode(char32_t c);

// Lowercase for ASCII, Latin-1 and Latin Extended-A; other code points unchanged.
char32_t fold_case(char32_t c);
std::u32string fold_case(std::u32string_view s);

bool is_letter(char32_t c);
bool is_digit(char32_t c);

std::size_t codepoint_length(std::string_view s);

}  // namespace ppu
