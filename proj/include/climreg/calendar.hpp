#pragma once

#include <compare>
#include <string>

namespace climreg {

/// Proleptic Gregorian calendar date. Plain value type, no time zone.
struct Date {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..days_in_month

    auto operator<=>(const Date&) const = default;
};

bool is_leap_year(int year);
int days_in_month(int year, int month);

/// 1-based day of year (Jan 1 -> 1).
int day_of_year(const Date& d);

/// Days since 1970-01-01 (can be negative).
long long serial_day(const Date& d);

/// Months since year 0, i.e. year*12 + (month-1). Used for lag arithmetic.
long long month_index(int year, int month);
inline long long month_index(const Date& d) { return month_index(d.year, d.month); }

/// Inverse of month_index.
void month_from_index(long long idx, int& year, int& month);

Date next_day(const Date& d);

bool valid_date(const Date& d);

/// Strict ISO-8601 "YYYY-MM-DD". Throws DataError on malformed input.
Date parse_date(const std::string& text);
std::string format_date(const Date& d);

} // namespace climreg
