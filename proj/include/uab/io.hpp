#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace uab {

/// Whole file as bytes; IoError when unreadable.
[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`, so readers never
/// observe a partial file. Parent directories are created.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace uab
