#include "climreg/oni.hpp"
#include "climreg/calendar.hpp"
#include "climreg/errors.hpp"
#include "climreg/io_util.hpp"

#include <cmath>
#include <sstream>

namespace climreg {

void OniSeries::validate() const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const OniEntry& e = entries[i];
        if (e.month < 1 || e.month > 12) {
            throw DataError("ONI month out of range");
        }
        if (!std::isfinite(e.oni)) {
            throw DataError("non-finite ONI value");
        }
        if (i > 0) {
            const long long prev = month_index(entries[i - 1].year, entries[i - 1].month);
            if (month_index(e.year, e.month) != prev + 1) {
                throw DataError("ONI series has a gap or is not monthly increasing");
            }
        }
    }
}

OniSeries load_oni(const std::filesystem::path& path) {
    const auto lines = read_lines(path);
    if (lines.empty() || lines[0] != "year,month,oni") {
        throw DataError("malformed ONI header (expected 'year,month,oni')");
    }
    OniSeries series;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = split_csv(lines[i]);
        if (fields.size() != 3) {
            throw DataError("malformed ONI row " + std::to_string(i + 1));
        }
        OniEntry e;
        e.year = static_cast<int>(parse_long(fields[0]));
        e.month = static_cast<int>(parse_long(fields[1]));
        e.oni = parse_double(fields[2]);
        series.entries.push_back(e);
    }
    series.validate();
    return series;
}

void write_oni(const OniSeries& series, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "year,month,oni\n";
    for (const OniEntry& e : series.entries) {
        out << e.year << ',' << e.month << ',' << format_double(e.oni) << '\n';
    }
    write_text_file(path, out.str());
}

} // namespace climreg
