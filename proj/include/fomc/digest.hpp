#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace fomc {

// Lowercase hex SHA-256.
std::string sha256(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);
// Digest over every regular file below `dir`, keyed by relative path in
// sorted order.
std::string sha256_tree(const std::filesystem::path& dir);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and renames it into place.
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace fomc
