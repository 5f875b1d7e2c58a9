#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace rootkgd {

/// Reads a whole file. Throws Error if it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);

/// Writes `text` to `path`, replacing any existing file.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace rootkgd
