#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace cantor {

std::string_view trim_view(std::string_view s);
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

// Splits on '\n'; a trailing '\r' is stripped from each line.
std::vector<std::string_view> split_lines(std::string_view text);

bool starts_with_icase(std::string_view text, std::string_view prefix);

// Keeps only [a-z0-9], lowercased. Used for tolerant name matching.
std::string squash_alnum(std::string_view s);

}  // namespace cantor
