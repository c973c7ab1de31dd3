#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace surgecal {

/// Naive Gregorian calendar date. No time zones, no time of day.
struct Date {
    int year = 1970;
    int month = 1;  // 1..12
    int day = 1;    // 1..31

    auto operator<=>(const Date&) const = default;
};

/// Days since 1970-01-01 (negative before). Valid across the full Gregorian range.
long days_from_civil(const Date& d);

/// Inverse of days_from_civil.
Date civil_from_days(long serial);

/// 0 = Sunday .. 6 = Saturday.
int day_of_week(const Date& d);

bool is_valid_date(const Date& d);

Date add_days(const Date& d, long n);

/// Signed day count b - a.
long days_between(const Date& a, const Date& b);

/// Formats as YYYY-MM-DD.
std::string to_iso(const Date& d);

/// Parses YYYY-MM-DD; throws std::invalid_argument on malformed input.
Date parse_iso(const std::string& s);

/// A retail week, identified by the Sunday that opens it.
struct WeekId {
    Date start_date;  // always a Sunday

    auto operator<=>(const WeekId&) const = default;
};

/// The week containing d, i.e. the Sunday on or before d.
WeekId week_of(const Date& d);

WeekId add_weeks(const WeekId& w, long n);

/// Signed week count b - a.
long weeks_between(const WeekId& a, const WeekId& b);

}  // namespace surgecal
