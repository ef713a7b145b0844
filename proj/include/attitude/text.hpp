#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace attitude::text {

// UTF-8 helpers. Invalid sequences decode byte-wise as U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

/// Simple case folding for Latin, Latin-1, Latin Extended-A, Greek and Cyrillic.
char32_t to_lower(char32_t c);
std::string to_lower(std::string_view s);

bool is_punctuation(char32_t c);

std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
std::string_view trim(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace attitude::text
