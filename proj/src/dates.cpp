#include "surgecal/dates.hpp"

#include <cstdio>
#include <stdexcept>

namespace surgecal {

namespace {

bool is_leap(int y) {
    return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
}

int days_in_month(int y, int m) {
    static const int table[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m == 2 && is_leap(y)) return 29;
    return table[m - 1];
}

}  // namespace

// Howard Hinnant's civil-days algorithm, proleptic Gregorian.
long days_from_civil(const Date& d) {
    long y = d.year;
    const long m = d.month;
    const long dd = d.day;
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const long yoe = y - era * 400;                                     // [0, 399]
    const long doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + dd - 1;   // [0, 365]
    const long doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;             // [0, 146096]
    return era * 146097 + doe - 719468;
}

Date civil_from_days(long serial) {
    long z = serial + 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const long doe = z - era * 146097;
    const long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long y = yoe + era * 400;
    const long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const long mp = (5 * doy + 2) / 153;
    const long dd = doy - (153 * mp + 2) / 5 + 1;
    const long m = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(dd)};
}

int day_of_week(const Date& d) {
    long s = days_from_civil(d);
    // 1970-01-01 was a Thursday (index 4 with Sunday = 0).
    long w = (s + 4) % 7;
    if (w < 0) w += 7;
    return static_cast<int>(w);
}

bool is_valid_date(const Date& d) {
    if (d.month < 1 || d.month > 12) return false;
    if (d.day < 1 || d.day > days_in_month(d.year, d.month)) return false;
    return true;
}

Date add_days(const Date& d, long n) {
    return civil_from_days(days_from_civil(d) + n);
}

long days_between(const Date& a, const Date& b) {
    return days_from_civil(b) - days_from_civil(a);
}

std::string to_iso(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

Date parse_iso(const std::string& s) {
    int y = 0, m = 0, d = 0;
    char trailing = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c", &y, &m, &d, &trailing) != 3 || s.size() != 10) {
        throw std::invalid_argument("not an ISO date (YYYY-MM-DD): '" + s + "'");
    }
    Date date{y, m, d};
    if (!is_valid_date(date)) {
        throw std::invalid_argument("invalid calendar date: '" + s + "'");
    }
    return date;
}

WeekId week_of(const Date& d) {
    return WeekId{add_days(d, -day_of_week(d))};
}

WeekId add_weeks(const WeekId& w, long n) {
    return WeekId{add_days(w.start_date, 7 * n)};
}

long weeks_between(const WeekId& a, const WeekId& b) {
    return days_between(a.start_date, b.start_date) / 7;
}

}  // namespace surgecal
