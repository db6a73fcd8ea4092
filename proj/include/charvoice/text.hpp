#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace charvoice::text {

// Invalid UTF-8 bytes decode to U+FFFD.
std::u32string decode_utf8(std::string_view bytes);
std::string encode_utf8(std::u32string_view code_points);

bool is_space(char32_t c);
bool is_word_char(char32_t c);
char32_t to_lower(char32_t c);

std::string_view trim(std::string_view s);
std::u32string_view trim(std::u32string_view s);

// Lowercases, collapses every whitespace run to one ASCII space and trims.
std::u32string normalize(std::string_view utf8);

// Lowercased word tokens. Punctuation and whitespace separate tokens; an
// apostrophe between two word characters stays inside the token ("don't").
std::vector<std::string> tokenize_words(std::string_view utf8);

}  // namespace charvoice::text
