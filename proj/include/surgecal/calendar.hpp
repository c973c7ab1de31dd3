#pragma once

#include <array>
#include <string>
#include <vector>

#include "surgecal/dates.hpp"

namespace surgecal {

/// The five retail holidays with strong localized seasonality.
enum class Holiday {
    Halloween,
    Easter,
    MothersDay,
    FathersDay,
    ValentinesDay,
};

inline constexpr std::array<Holiday, 5> kAllHolidays = {
    Holiday::Halloween, Holiday::Easter, Holiday::MothersDay,
    Holiday::FathersDay, Holiday::ValentinesDay,
};

/// Display form, e.g. "Mother's Day".
std::string holiday_display_name(Holiday h);

/// Lower-case form used in prompts and for holiday-related matching,
/// e.g. "mother's day".
std::string holiday_canonical_name(Holiday h);

/// Parses either form; throws std::invalid_argument on unknown names.
Holiday holiday_from_name(const std::string& name);

inline constexpr int kMinCalendarYear = 1900;
inline constexpr int kMaxCalendarYear = 2199;

/// Western (Gregorian) Easter Sunday, anonymous Gregorian computus.
/// Throws std::out_of_range outside [1900, 2199].
Date easter_date(int year);

/// Concrete date of a holiday in a given year.
Date holiday_date(Holiday h, int year);

/// A holiday occurrence near a target date. offset_weeks < 0 means the
/// holiday precedes the target.
struct HolidayProximity {
    Holiday holiday;
    Date holiday_date;
    int offset_weeks;
};

/// Occurrences of one holiday within +/- window_weeks * 7 days of
/// target_date, searching the target year and both adjacent years.
/// offset_weeks = round(day difference / 7), half away from zero.
std::vector<HolidayProximity> week_proximity(const Date& target_date, Holiday h,
                                             int calendar_window_weeks);

/// All five holidays' occurrences near target_date, sorted by |offset_weeks|
/// ascending (ties: earlier offset first, then enum order).
std::vector<HolidayProximity> nearby_holidays(const Date& target_date,
                                              int calendar_window_weeks);

}  // namespace surgecal
