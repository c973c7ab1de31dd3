#include "surgecal/prompting.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace surgecal {

namespace {

void require_slot(bool present, const char* slot) {
    if (!present) throw std::runtime_error(std::string("prompt render error: missing slot: ") + slot);
}

std::string format_price(double price) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", price);
    return buf;
}

std::string format_units(double v) { return std::to_string(static_cast<long long>(std::llround(v))); }

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

std::string season_label_for(const std::vector<HolidayProximity>& proximities) {
    for (const HolidayProximity& p : proximities) {
        if (p.offset_weeks >= 0) return holiday_display_name(p.holiday);
    }
    return "upcoming";
}

PromptContext make_prompt_context(const Product& product, const ForecastRecord& forecast,
                                  int calendar_window_weeks) {
    PromptContext ctx;
    ctx.product = product;
    ctx.forecast = forecast;
    ctx.today = forecast.creation_week.start_date;
    ctx.proximities = nearby_holidays(forecast.target_week.start_date, calendar_window_weeks);
    ctx.season_label = season_label_for(ctx.proximities);
    return ctx;
}

std::string render_holiday_encoding(const Date& target_date,
                                    const std::vector<HolidayProximity>& proximities) {
    std::string out;
    for (const HolidayProximity& p : proximities) {
        out += "The " + holiday_canonical_name(p.holiday) + " at " + to_iso(p.holiday_date);
        if (p.offset_weeks == 0) {
            out += " is in the week of " + to_iso(target_date) + ".";
        } else {
            int n = std::abs(p.offset_weeks);
            out += " is " + std::to_string(n) + (n == 1 ? " week " : " weeks ") +
                   (p.offset_weeks < 0 ? "before " : "after ") + to_iso(target_date) + ".";
        }
        out += '\n';
    }
    if (!out.empty()) out.pop_back();  // no trailing newline
    return out;
}

std::string render_prompt_text(const PromptContext& ctx, bool include_holiday_encoding) {
    const Product& p = ctx.product;
    require_slot(!ctx.season_label.empty(), "season label");
    require_slot(!p.title.empty(), "product title");
    require_slot(p.list_price > 0.0, "list price");
    require_slot(!p.product_group.empty(), "product group");
    require_slot(!p.description.empty(), "product description");
    require_slot(ctx.forecast.p50 >= 0.0 && ctx.forecast.p90 >= 0.0, "forecast quantiles");

    std::string target = to_iso(ctx.forecast.target_week.start_date);

    std::string out;
    out += "Pretend you are a sales analyst preparing for the " + ctx.season_label +
           " season. You need to adjust the current model's prediction for a specific "
           "product's sales week of " + target + ".\n\n";
    out += "### Instruction:\n\n";
    if (include_holiday_encoding) {
        std::string block =
            render_holiday_encoding(ctx.forecast.target_week.start_date, ctx.proximities);
        if (!block.empty()) out += block + "\n\n";
    }
    out += "Today's date: " + to_iso(ctx.today) + ".\n\n";
    out += "Product Title: " + p.title + "\n\n";
    out += "List Price: $" + format_price(p.list_price) + ".\n\n";
    out += "Item Created At: " + to_iso(p.created_at) + ".\n\n";
    out += "Product Group Type:  " + p.product_group + "\n\n";
    out += "Description: " + p.description + "\n\n";
    out += "Bullet Points: " + join(p.bullet_points, "; ") + "\n\n";
    out += "The current prediction for week " + target + "'s sales is " +
           format_units(ctx.forecast.p50) + " units with a 90th percentile " +
           format_units(ctx.forecast.p90) +
           " units. Please provide your adjusted prediction for next week's sales volume "
           "considering today's date, the season, the holiday, and the product. Explain your "
           "reasoning.\n\n";
    out += "### Response Format: - Prediction: [Your Adjusted Prediction] units - Reasoning: "
           "[Explanation]\n\n";
    out += "### Response:\n";
    return out;
}

RenderedPrompt render_prompt(const PromptContext& ctx, bool include_holiday_encoding,
                             const Tokenizer& tokenizer, int max_len) {
    RenderedPrompt rp;
    rp.text = render_prompt_text(ctx, include_holiday_encoding);
    auto [ids, truncated] = tokenizer.encode(rp.text, max_len);
    rp.token_ids = std::move(ids);
    rp.truncated = truncated;
    return rp;
}

}  // namespace surgecal
