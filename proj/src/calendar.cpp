#include "surgecal/calendar.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace surgecal {

std::string holiday_display_name(Holiday h) {
    switch (h) {
        case Holiday::Halloween: return "Halloween";
        case Holiday::Easter: return "Easter";
        case Holiday::MothersDay: return "Mother's Day";
        case Holiday::FathersDay: return "Father's Day";
        case Holiday::ValentinesDay: return "Valentine's Day";
    }
    throw std::logic_error("unreachable holiday kind");
}

std::string holiday_canonical_name(Holiday h) {
    std::string s = holiday_display_name(h);
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

Holiday holiday_from_name(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    for (Holiday h : kAllHolidays) {
        if (lower == holiday_canonical_name(h)) return h;
    }
    throw std::invalid_argument("unknown holiday: '" + name + "'");
}

namespace {

void check_year(int year) {
    if (year < kMinCalendarYear || year > kMaxCalendarYear) {
        throw std::out_of_range("year " + std::to_string(year) + " outside supported window [" +
                                std::to_string(kMinCalendarYear) + ", " +
                                std::to_string(kMaxCalendarYear) + "]");
    }
}

/// n-th (1-based) occurrence of a weekday (0 = Sunday) in a month.
Date nth_weekday_of_month(int year, int month, int weekday, int n) {
    Date first{year, month, 1};
    int shift = (weekday - day_of_week(first) + 7) % 7;
    return add_days(first, shift + 7L * (n - 1));
}

}  // namespace

Date easter_date(int year) {
    check_year(year);
    // Anonymous Gregorian computus.
    int a = year % 19;
    int b = year / 100;
    int c = year % 100;
    int d = b / 4;
    int e = b % 4;
    int f = (b + 8) / 25;
    int g = (b - f + 1) / 3;
    int h = (19 * a + b - d - g + 15) % 30;
    int i = c / 4;
    int k = c % 4;
    int l = (32 + 2 * e + 2 * i - h - k) % 7;
    int m = (a + 11 * h + 22 * l) / 451;
    int month = (h + l - 7 * m + 114) / 31;
    int day = ((h + l - 7 * m + 114) % 31) + 1;
    return Date{year, month, day};
}

Date holiday_date(Holiday h, int year) {
    check_year(year);
    switch (h) {
        case Holiday::Halloween: return Date{year, 10, 31};
        case Holiday::ValentinesDay: return Date{year, 2, 14};
        case Holiday::MothersDay: return nth_weekday_of_month(year, 5, 0, 2);
        case Holiday::FathersDay: return nth_weekday_of_month(year, 6, 0, 3);
        case Holiday::Easter: return easter_date(year);
    }
    throw std::logic_error("unreachable holiday kind");
}

std::vector<HolidayProximity> week_proximity(const Date& target_date, Holiday h,
                                             int calendar_window_weeks) {
    if (calendar_window_weeks < 1) {
        throw std::invalid_argument("calendar_window_weeks must be >= 1");
    }
    std::vector<HolidayProximity> out;
    for (int year = target_date.year - 1; year <= target_date.year + 1; ++year) {
        if (year < kMinCalendarYear || year > kMaxCalendarYear) continue;
        Date occurrence = holiday_date(h, year);
        long delta_days = days_between(target_date, occurrence);
        if (std::labs(delta_days) > 7L * calendar_window_weeks) continue;
        // Round half away from zero; keeps both A.2 offsets exact.
        double weeks = static_cast<double>(delta_days) / 7.0;
        int offset = static_cast<int>(weeks >= 0 ? std::floor(weeks + 0.5) : std::ceil(weeks - 0.5));
        out.push_back(HolidayProximity{h, occurrence, offset});
    }
    return out;
}

std::vector<HolidayProximity> nearby_holidays(const Date& target_date,
                                              int calendar_window_weeks) {
    std::vector<HolidayProximity> out;
    for (Holiday h : kAllHolidays) {
        auto found = week_proximity(target_date, h, calendar_window_weeks);
        out.insert(out.end(), found.begin(), found.end());
    }
    std::sort(out.begin(), out.end(), [](const HolidayProximity& a, const HolidayProximity& b) {
        int aa = std::abs(a.offset_weeks), bb = std::abs(b.offset_weeks);
        if (aa != bb) return aa < bb;
        if (a.offset_weeks != b.offset_weeks) return a.offset_weeks < b.offset_weeks;
        return static_cast<int>(a.holiday) < static_cast<int>(b.holiday);
    });
    return out;
}

}  // namespace surgecal
