#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace textalpha::io {

std::string read_file(const std::filesystem::path& path);

/// Write to `<path>.tmp` then rename over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Fixed-precision decimal rendering shared by every text artifact.
std::string fmt_double(double value, int precision = 10);

/// Shortest round-trippable rendering (%.17g).
std::string fmt_exact(double value);

}  // namespace textalpha::io
