#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>

namespace syntaxlens {

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partial file. Creates parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Calls fn(line, line_number) for every non-blank line.
void for_each_jsonl_line(const std::filesystem::path& path,
                         const std::function<void(std::string_view, std::size_t)>& fn);

/// RFC 4180 quoting when the field needs it.
std::string csv_field(std::string_view text);

}  // namespace syntaxlens
