#include "climreg/calendar.hpp"
#include "climreg/errors.hpp"

#include <array>
#include <charconv>
#include <cstdio>

namespace climreg {

bool is_leap_year(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int days_in_month(int year, int month) {
    static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30,
                                                    31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap_year(year)) {
        return 29;
    }
    return lengths[static_cast<std::size_t>(month - 1)];
}

int day_of_year(const Date& d) {
    int doy = d.day;
    for (int m = 1; m < d.month; ++m) {
        doy += days_in_month(d.year, m);
    }
    return doy;
}

long long serial_day(const Date& d) {
    // Civil-days algorithm (Howard Hinnant's days_from_civil).
    long long y = d.year;
    const long long m = d.month;
    y -= m <= 2 ? 1 : 0;
    const long long era = (y >= 0 ? y : y - 399) / 400;
    const long long yoe = y - era * 400;
    const long long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d.day - 1;
    const long long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

long long month_index(int year, int month) {
    return static_cast<long long>(year) * 12 + (month - 1);
}

void month_from_index(long long idx, int& year, int& month) {
    long long y = idx / 12;
    long long m = idx % 12;
    if (m < 0) {
        m += 12;
        y -= 1;
    }
    year = static_cast<int>(y);
    month = static_cast<int>(m) + 1;
}

Date next_day(const Date& d) {
    Date n = d;
    if (++n.day > days_in_month(n.year, n.month)) {
        n.day = 1;
        if (++n.month > 12) {
            n.month = 1;
            ++n.year;
        }
    }
    return n;
}

bool valid_date(const Date& d) {
    return d.month >= 1 && d.month <= 12 && d.day >= 1 &&
           d.day <= days_in_month(d.year, d.month);
}

Date parse_date(const std::string& text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError("malformed date '" + text + "' (expected YYYY-MM-DD)");
    }
    Date d;
    auto parse_int = [&](const char* first, const char* last, int& out) {
        auto [ptr, ec] = std::from_chars(first, last, out);
        if (ec != std::errc{} || ptr != last) {
            throw DataError("malformed date '" + text + "' (expected YYYY-MM-DD)");
        }
    };
    const char* s = text.data();
    parse_int(s, s + 4, d.year);
    parse_int(s + 5, s + 7, d.month);
    parse_int(s + 8, s + 10, d.day);
    if (!valid_date(d)) {
        throw DataError("invalid calendar date '" + text + "'");
    }
    return d;
}

std::string format_date(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

} // namespace climreg
