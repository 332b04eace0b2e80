#pragma once

#include <filesystem>
#include <vector>

namespace climreg {

struct OniEntry {
    int year = 0;
    int month = 0; // 1..12
    double oni = 0.0;
};

/// Monthly Oceanic Nino Index series, strictly increasing with no gaps.
struct OniSeries {
    std::vector<OniEntry> entries;

    void validate() const; // throws DataError on gaps / non-monotone months
};

/// CSV with header `year,month,oni`.
OniSeries load_oni(const std::filesystem::path& path);
void write_oni(const OniSeries& series, const std::filesystem::path& path);

} // namespace climreg
