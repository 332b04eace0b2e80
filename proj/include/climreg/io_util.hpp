#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace climreg {

/// Shortest round-trip decimal form (std::to_chars). Locale-independent and
/// byte-stable across runs, which the artifact determinism contract relies on.
std::string format_double(double v);
std::string format_float(float v);

double parse_double(const std::string& s);
/// Parses as binary32 so CSV round-trips are bitwise exact.
float parse_float(const std::string& s);
long parse_long(const std::string& s);

/// Splits on ',' with no quoting rules (none of the project formats need any).
std::vector<std::string> split_csv(const std::string& line);

std::vector<std::string> read_lines(const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& content);

/// Little-endian binary32 payload helpers, byte-order independent.
void write_f32_le(std::ostream& out, const float* data, std::size_t count);
void read_f32_le(std::istream& in, float* data, std::size_t count);

} // namespace climreg
