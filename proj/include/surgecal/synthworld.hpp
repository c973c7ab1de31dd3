#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "surgecal/calendar.hpp"
#include "surgecal/dates.hpp"

namespace surgecal {

/// Planted link between a product and one holiday: demand is multiplied by
/// surge_multiplier over the surge_window_weeks weeks ending at the holiday's
/// week.
struct HolidayAffinity {
    Holiday holiday;
    double surge_multiplier;   // > 1
    int surge_window_weeks;    // >= 1
};

struct Product {
    std::string product_id;
    std::string title;
    std::string description;
    std::vector<std::string> bullet_points;
    double list_price = 0.0;
    Date created_at;
    std::string product_group;
    std::optional<HolidayAffinity> holiday_affinity;
};

/// Weekly unit demand, contiguous from first_week.
struct DemandSeries {
    std::string product_id;
    WeekId first_week;
    std::vector<long> values;  // units sold, >= 0

    int n_weeks() const { return static_cast<int>(values.size()); }
    WeekId week_at(int index) const { return add_weeks(first_week, index); }
    bool covers(const WeekId& w) const;
    long value_at(const WeekId& w) const;  // throws std::out_of_range off-series
};

/// Baseline quantile forecast for one product-week at a fixed lead time.
struct ForecastRecord {
    std::string product_id;
    WeekId target_week;
    WeekId creation_week;
    double p50 = 0.0;
    double p90 = 0.0;
};

struct ValentineShiftConfig {
    bool enabled = false;
    // Share of the two-week Valentine demand mass landing in the holiday week:
    // share = clamp(base_share + per_weekday_share * weekday(Feb 14), 0, 1)
    // with weekday 0 = Sunday. Later weekdays push mass into the holiday week.
    double base_share = 0.125;
    double per_weekday_share = 0.125;
};

struct WorldConfig {
    int n_products = 200;
    double fraction_holiday_related = 0.5;  // in [0, 1)
    Date first_week_start{2021, 8, 29};     // Sunday opening the simulated span

    // Base weekly demand level, log-uniform per product.
    double base_level_min = 20.0;
    double base_level_max = 120.0;

    // Smooth annual cycle, per-product phase. 0 disables.
    double annual_seasonality_amplitude = 0.15;

    // Global surge every year over the weeks ending at Christmas week.
    // Peak multiplier 1 disables.
    double christmas_peak = 2.5;
    int christmas_window_weeks = 5;

    // Localized holiday surges for affinity products.
    double holiday_surge_multiplier_min = 3.0;
    double holiday_surge_multiplier_max = 5.0;
    int holiday_surge_window_weeks = 2;

    // Multiplicative lognormal noise with mean 1 (mu = -sigma^2/2). 0 disables.
    double noise_sigma = 0.0;

    // Independent per-week censoring to zero.
    double stockout_probability = 0.0;

    ValentineShiftConfig valentine_shift;

    // Baseline forecaster's p90 / p50 ratio.
    double baseline_p90_ratio = 1.4;

    std::uint64_t random_seed = 1;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;
};

struct World {
    WorldConfig config;
    std::vector<Product> catalog;
    std::vector<DemandSeries> demand;          // aligned with catalog
    std::vector<ForecastRecord> forecasts;     // grouped by product, week ascending

    const Product& product(const std::string& product_id) const;
    const DemandSeries& series(const std::string& product_id) const;
};

/// True iff the holiday's canonical name occurs case-insensitively in the
/// product's title or description.
bool is_holiday_related(const Product& product, Holiday holiday);

/// Deterministic catalog; fraction_holiday_related of products carry an
/// affinity (spread round-robin across the five holidays) and embed the
/// holiday name in their title or description.
std::vector<Product> generate_catalog(const WorldConfig& config);

/// Evaluates the generative mean path (base level x annual seasonality x
/// Christmas surge) and the planted holiday surge factor. Pure functions of
/// (config, product, week); shared by the simulator and the baseline
/// forecaster so the baseline is exactly the surge-free oracle.
class DemandModel {
public:
    explicit DemandModel(const WorldConfig& config) : config_(config) {}

    double base_level(const Product& product) const;
    double annual_seasonality(const Product& product, const WeekId& week) const;
    double christmas_multiplier(const WeekId& week) const;
    double holiday_surge(const Product& product, const WeekId& week) const;

    /// base_level x annual_seasonality x christmas_multiplier (no surge, no noise).
    double mean_path(const Product& product, const WeekId& week) const;

private:
    WorldConfig config_;
};

/// Weekly demand y = round(mean_path x holiday_surge x noise), censored to 0
/// on stockout weeks. Deterministic given config.random_seed.
std::vector<DemandSeries> simulate_demand(const std::vector<Product>& catalog,
                                          const WeekId& start_week, int n_weeks,
                                          const WorldConfig& config);

/// The text-blind baseline: p50 = mean_path (anticipates the global Christmas
/// surge but never the localized holiday surges), p90 = p50 x configured ratio.
std::vector<ForecastRecord> baseline_forecast(const std::vector<Product>& catalog,
                                              const WeekId& start_week, int n_weeks,
                                              int lead_time_weeks, const WorldConfig& config);

World build_world(const WorldConfig& config, int n_weeks, int lead_time_weeks);

// --- persistence -----------------------------------------------------------

std::string catalog_to_jsonl(const std::vector<Product>& catalog);
std::vector<Product> catalog_from_jsonl(const std::string& jsonl);

/// CSV with header product_id,week_start,value
std::string demand_to_csv(const std::vector<DemandSeries>& demand);
std::vector<DemandSeries> demand_from_csv(const std::string& csv);

/// CSV with header product_id,week_start,value,p90 (value = p50).
std::string forecasts_to_csv(const std::vector<ForecastRecord>& forecasts,
                             int lead_time_weeks);
std::vector<ForecastRecord> forecasts_from_csv(const std::string& csv, int lead_time_weeks);

}  // namespace surgecal
