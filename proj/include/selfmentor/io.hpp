#pragma once

#include <filesystem>
#include <string_view>

namespace selfmentor {

// Writes to a sibling temp file then renames over the target, so readers
// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace selfmentor
