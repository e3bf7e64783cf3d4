#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace cantor {

// Whole-file read. Throws DataError{io} if unreadable.
std::string read_file(const std::filesystem::path& path);

// Writes atomically (temp file + rename), creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view content);

// Non-empty lines of a JSONL-style file.
std::vector<std::string> read_lines(const std::filesystem::path& path);

}  // namespace cantor
