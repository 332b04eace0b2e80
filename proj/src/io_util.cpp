#include "climreg/io_util.hpp"
#include "climreg/errors.hpp"

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <ostream>

namespace climreg {

std::string format_double(double v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_float(float v) {
    char buf[40];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

double parse_double(const std::string& s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError("not a number: '" + s + "'");
    }
    return v;
}

float parse_float(const std::string& s) {
    float v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError("not a number: '" + s + "'");
    }
    return v;
}

long parse_long(const std::string& s) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw DataError("not an integer: '" + s + "'");
    }
    return v;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open file: " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    return lines;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError("cannot write file: " + path.string());
    }
    out << content;
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

void write_f32_le(std::ostream& out, const float* data, std::size_t count) {
    std::vector<char> buf(count * 4);
    for (std::size_t i = 0; i < count; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &data[i], 4);
        buf[4 * i + 0] = static_cast<char>(bits & 0xff);
        buf[4 * i + 1] = static_cast<char>((bits >> 8) & 0xff);
        buf[4 * i + 2] = static_cast<char>((bits >> 16) & 0xff);
        buf[4 * i + 3] = static_cast<char>((bits >> 24) & 0xff);
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
}

void read_f32_le(std::istream& in, float* data, std::size_t count) {
    std::vector<char> buf(count * 4);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
        throw DataError("truncated binary payload");
    }
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint32_t b0 = static_cast<unsigned char>(buf[4 * i + 0]);
        const std::uint32_t b1 = static_cast<unsigned char>(buf[4 * i + 1]);
        const std::uint32_t b2 = static_cast<unsigned char>(buf[4 * i + 2]);
        const std::uint32_t b3 = static_cast<unsigned char>(buf[4 * i + 3]);
        const std::uint32_t bits = b0 | (b1 << 8) | (b2 << 16) | (b3 << 24);
        std::memcpy(&data[i], &bits, 4);
    }
}

} // namespace climreg
