#pragma once

#include <string>
#include <string_view>

namespace spanbench {

std::string read_file(const std::string& path);

// Writes via a temp file in the same directory followed by a rename, so an
// interrupted run never leaves a truncated output behind.
void write_file_atomic(const std::string& path, std::string_view content);

}  // namespace spanbench
