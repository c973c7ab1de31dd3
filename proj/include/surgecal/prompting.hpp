#pragma once

#include <string>
#include <vector>

#include "surgecal/calendar.hpp"
#include "surgecal/synthworld.hpp"
#include "surgecal/tokenizer.hpp"

namespace surgecal {

/// Everything the prompt template needs for one (product, target week) pair.
struct PromptContext {
    Product product;
    ForecastRecord forecast;
    Date today;                                // forecast creation date
    std::vector<HolidayProximity> proximities; // sorted by |offset_weeks| asc
    std::string season_label;                  // e.g. "Halloween"
};

/// Prompt text plus its tokenization, as consumed by the encoder.
struct RenderedPrompt {
    std::string text;
    std::vector<int> token_ids;
    bool truncated = false;
};

/// Label for the persona line: display name of the nearest holiday at or
/// after the target date, "upcoming" when none is in the window.
std::string season_label_for(const std::vector<HolidayProximity>& proximities);

PromptContext make_prompt_context(const Product& product, const ForecastRecord& forecast,
                                  int calendar_window_weeks);

/// One line per proximity:
///   "The {holiday} at {date} is {N} week(s) {before|after} {target}."
/// Zero offsets render as "is in the week of {target}". Empty list -> "".
std::string render_holiday_encoding(const Date& target_date,
                                    const std::vector<HolidayProximity>& proximities);

/// Fills the analyst prompt template. Throws std::runtime_error naming the
/// slot when a required field is missing.
std::string render_prompt_text(const PromptContext& ctx, bool include_holiday_encoding);

RenderedPrompt render_prompt(const PromptContext& ctx, bool include_holiday_encoding,
                             const Tokenizer& tokenizer, int max_len);

}  // namespace surgecal
