#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace sim2real {

// Writes to a sibling temp file and renames it into place.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);
void write_bytes_atomic(const std::filesystem::path& path, std::string_view bytes);
std::string read_text(const std::filesystem::path& path);

}  // namespace sim2real
