#include "cantor/util/fs.hpp"

#include <fstream>
#include <sstream>

#include "cantor/errors.hpp"
#include "cantor/util/text.hpp"

namespace cantor {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataError("io", "cannot read file: " + path.string());
  }
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw DataError("io", "cannot write file: " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw DataError("io", "write failed: " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::string content = read_file(path);
  std::vector<std::string> out;
  for (std::string_view line : split_lines(content)) {
    if (!trim_view(line).empty()) out.emplace_back(line);
  }
  return out;
}

}  // namespace cantor
