#include "surgecal/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "surgecal/io.hpp"
#include "surgecal/rng.hpp"

#include <json.hpp>

namespace surgecal {

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Word pools for generated product text. None of these may contain a holiday
// name; non-affinity products are built exclusively from them.
const std::vector<std::string> kAdjectives = {
    "Classic", "Deluxe", "Handmade", "Premium", "Cozy",
    "Vibrant", "Rustic", "Compact", "Vintage", "Artisan",
};
const std::vector<std::string> kNouns = {
    "Mug",        "Candle Set",   "Throw Blanket", "Puzzle",       "Tote Bag",
    "Wall Art",   "String Lights", "Gift Box",     "Cookie Cutter Set",
    "Table Runner", "Apron",      "Sticker Pack",  "Greeting Cards", "Wreath",
    "Ornament",   "Serving Tray",
};
const std::vector<std::string> kGroups = {
    "Home", "Kitchen", "Toys & Games", "Stationery", "Apparel", "Grocery",
};
const std::vector<std::string> kBullets = {
    "easy to clean",
    "made from recycled materials",
    "ships in protective packaging",
    "available in multiple colors",
    "designed for everyday use",
    "backed by a one year warranty",
};

std::string pick(Rng& rng, const std::vector<std::string>& pool) {
    return pool[static_cast<size_t>(rng.uniform_index(pool.size()))];
}

Product make_product(int index, const WorldConfig& config, bool has_affinity,
                     Holiday holiday, std::uint64_t master_seed) {
    char idbuf[16];
    std::snprintf(idbuf, sizeof(idbuf), "P%04d", index);
    Product p;
    p.product_id = idbuf;

    Rng rng(derive_seed(master_seed, "product/" + p.product_id));
    std::string adj = pick(rng, kAdjectives);
    std::string noun = pick(rng, kNouns);
    p.product_group = pick(rng, kGroups);
    p.list_price = std::round(rng.uniform(3.0, 80.0) * 100.0) / 100.0;
    p.created_at = add_days(config.first_week_start,
                            -static_cast<long>(28 + rng.uniform_index(700)));

    int n_bullets = static_cast<int>(rng.uniform_index(4));  // 0..3
    for (int b = 0; b < n_bullets; ++b) p.bullet_points.push_back(pick(rng, kBullets));

    if (!has_affinity) {
        p.title = adj + " " + noun;
        p.description = "A " + to_lower(adj) + " " + to_lower(noun) +
                        " for the whole household. Built to last and simple to use.";
        return p;
    }

    double m = rng.uniform(config.holiday_surge_multiplier_min,
                           config.holiday_surge_multiplier_max);
    p.holiday_affinity = HolidayAffinity{holiday, m, config.holiday_surge_window_weeks};

    std::string display = holiday_display_name(holiday);
    std::string lower = holiday_canonical_name(holiday);
    // Three phrasing variants so the holiday name lands in the title, the
    // description, or both.
    switch (rng.uniform_index(3)) {
        case 0:
            p.title = adj + " " + display + " " + noun;
            p.description = "A " + to_lower(adj) + " " + to_lower(noun) + " made for the " +
                            lower + " season. A festive favorite every year.";
            break;
        case 1:
            p.title = adj + " " + display + " " + noun;
            p.description = "A " + to_lower(adj) + " " + to_lower(noun) +
                            " with a seasonal design. A festive favorite every year.";
            break;
        default:
            p.title = adj + " " + noun;
            p.description = "A " + to_lower(adj) + " " + to_lower(noun) + ". Perfect as a " +
                            lower + " gift for friends and family.";
            break;
    }
    return p;
}

long round_half_up(double x) { return static_cast<long>(std::floor(x + 0.5)); }

}  // namespace

void WorldConfig::validate() const {
    if (n_products < 1) throw std::invalid_argument("world.n_products must be >= 1");
    if (fraction_holiday_related < 0.0 || fraction_holiday_related >= 1.0 + 1e-12) {
        throw std::invalid_argument("world.fraction_holiday_related must be in [0, 1]");
    }
    if (day_of_week(first_week_start) != 0) {
        throw std::invalid_argument("world.first_week_start must be a Sunday");
    }
    if (base_level_min <= 0 || base_level_max < base_level_min) {
        throw std::invalid_argument("world.base_level range must satisfy 0 < min <= max");
    }
    if (annual_seasonality_amplitude < 0.0 || annual_seasonality_amplitude >= 1.0) {
        throw std::invalid_argument("world.annual_seasonality_amplitude must be in [0, 1)");
    }
    if (christmas_peak < 1.0) throw std::invalid_argument("world.christmas_peak must be >= 1");
    if (christmas_window_weeks < 1) {
        throw std::invalid_argument("world.christmas_window_weeks must be >= 1");
    }
    if (holiday_surge_multiplier_min < 1.0 ||
        holiday_surge_multiplier_max < holiday_surge_multiplier_min) {
        throw std::invalid_argument("world.holiday_surge_multiplier range must satisfy 1 <= min <= max");
    }
    if (holiday_surge_window_weeks < 1) {
        throw std::invalid_argument("world.holiday_surge_window_weeks must be >= 1");
    }
    if (noise_sigma < 0.0) throw std::invalid_argument("world.noise_sigma must be >= 0");
    if (stockout_probability < 0.0 || stockout_probability >= 1.0) {
        throw std::invalid_argument("world.stockout_probability must be in [0, 1)");
    }
    if (baseline_p90_ratio < 1.0) {
        throw std::invalid_argument("world.baseline_p90_ratio must be >= 1");
    }
}

bool DemandSeries::covers(const WeekId& w) const {
    long idx = weeks_between(first_week, w);
    return idx >= 0 && idx < n_weeks();
}

long DemandSeries::value_at(const WeekId& w) const {
    long idx = weeks_between(first_week, w);
    if (idx < 0 || idx >= n_weeks()) {
        throw std::out_of_range("no demand observation for " + product_id + " at week " +
                                to_iso(w.start_date));
    }
    return values[static_cast<size_t>(idx)];
}

const Product& World::product(const std::string& product_id) const {
    for (const auto& p : catalog) {
        if (p.product_id == product_id) return p;
    }
    throw std::out_of_range("unknown product: " + product_id);
}

const DemandSeries& World::series(const std::string& product_id) const {
    for (const auto& s : demand) {
        if (s.product_id == product_id) return s;
    }
    throw std::out_of_range("no demand series for product: " + product_id);
}

bool is_holiday_related(const Product& product, Holiday holiday) {
    std::string needle = holiday_canonical_name(holiday);
    return to_lower(product.title).find(needle) != std::string::npos ||
           to_lower(product.description).find(needle) != std::string::npos;
}

std::vector<Product> generate_catalog(const WorldConfig& config) {
    config.validate();
    int n = config.n_products;
    int n_affinity = static_cast<int>(std::llround(config.fraction_holiday_related * n));

    // Deterministic shuffle decides which catalog slots carry an affinity.
    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng shuffle_rng(derive_seed(config.random_seed, "catalog/affinity"));
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(shuffle_rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
        std::swap(order[static_cast<size_t>(i)], order[static_cast<size_t>(j)]);
    }
    std::vector<int> affinity_slot(static_cast<size_t>(n), -1);
    for (int a = 0; a < n_affinity; ++a) {
        affinity_slot[static_cast<size_t>(order[static_cast<size_t>(a)])] = a % 5;
    }

    std::vector<Product> catalog;
    catalog.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        int slot = affinity_slot[static_cast<size_t>(i)];
        bool has = slot >= 0;
        Holiday h = has ? kAllHolidays[static_cast<size_t>(slot)] : Holiday::Halloween;
        catalog.push_back(make_product(i, config, has, h, config.random_seed));
    }
    return catalog;
}

double DemandModel::base_level(const Product& product) const {
    Rng rng(derive_seed(config_.random_seed, "base/" + product.product_id));
    return std::exp(rng.uniform(std::log(config_.base_level_min),
                                std::log(config_.base_level_max)));
}

double DemandModel::annual_seasonality(const Product& product, const WeekId& week) const {
    if (config_.annual_seasonality_amplitude <= 0.0) return 1.0;
    Rng rng(derive_seed(config_.random_seed, "phase/" + product.product_id));
    double phase = rng.uniform(0.0, 6.283185307179586);
    Date jan1{week.start_date.year, 1, 1};
    double year_fraction = static_cast<double>(days_between(jan1, week.start_date)) / 365.25;
    return 1.0 + config_.annual_seasonality_amplitude *
                     std::sin(6.283185307179586 * year_fraction + phase);
}

double DemandModel::christmas_multiplier(const WeekId& week) const {
    if (config_.christmas_peak <= 1.0) return 1.0;
    int w = config_.christmas_window_weeks;
    for (int year = week.start_date.year; year <= week.start_date.year + 1; ++year) {
        WeekId xmas_week = week_of(Date{year, 12, 25});
        long offset = weeks_between(xmas_week, week);  // 0 at the Christmas week
        if (offset <= 0 && offset > -w) {
            double ramp = static_cast<double>(offset + w) / w;  // (0, 1]
            return 1.0 + (config_.christmas_peak - 1.0) * ramp;
        }
    }
    return 1.0;
}

double DemandModel::holiday_surge(const Product& product, const WeekId& week) const {
    if (!product.holiday_affinity) return 1.0;
    const HolidayAffinity& aff = *product.holiday_affinity;
    bool shifted = aff.holiday == Holiday::ValentinesDay && config_.valentine_shift.enabled;
    int window = shifted ? 2 : aff.surge_window_weeks;

    for (int year = week.start_date.year; year <= week.start_date.year + 1; ++year) {
        if (year < kMinCalendarYear || year > kMaxCalendarYear) continue;
        Date hd = holiday_date(aff.holiday, year);
        WeekId holiday_week = week_of(hd);
        long offset = weeks_between(holiday_week, week);  // 0 at the holiday week
        if (offset > 0 || offset <= -window) continue;
        if (!shifted) return aff.surge_multiplier;
        // Two-week Valentine mass split by the weekday Feb 14 falls on. At
        // share 0.5 this reduces to the plain window-2 surge.
        const ValentineShiftConfig& vs = config_.valentine_shift;
        double share = std::clamp(vs.base_share + vs.per_weekday_share * day_of_week(hd), 0.0, 1.0);
        double mass = 2.0 * (aff.surge_multiplier - 1.0);
        return offset == 0 ? 1.0 + mass * share : 1.0 + mass * (1.0 - share);
    }
    return 1.0;
}

double DemandModel::mean_path(const Product& product, const WeekId& week) const {
    return base_level(product) * annual_seasonality(product, week) * christmas_multiplier(week);
}

std::vector<DemandSeries> simulate_demand(const std::vector<Product>& catalog,
                                          const WeekId& start_week, int n_weeks,
                                          const WorldConfig& config) {
    if (n_weeks < 1) throw std::invalid_argument("n_weeks must be >= 1");
    config.validate();
    DemandModel model(config);
    std::vector<DemandSeries> out;
    out.reserve(catalog.size());
    for (const Product& p : catalog) {
        Rng rng(derive_seed(config.random_seed, "demand/" + p.product_id));
        DemandSeries series;
        series.product_id = p.product_id;
        series.first_week = start_week;
        series.values.reserve(static_cast<size_t>(n_weeks));
        for (int k = 0; k < n_weeks; ++k) {
            WeekId week = add_weeks(start_week, k);
            double level = model.mean_path(p, week) * model.holiday_surge(p, week);
            if (config.noise_sigma > 0.0) {
                // Mean-one lognormal: the baseline stays the true mean while
                // the realized median sits below it.
                double mu = -0.5 * config.noise_sigma * config.noise_sigma;
                level *= rng.lognormal(mu, config.noise_sigma);
            }
            long y = round_half_up(level);
            if (config.stockout_probability > 0.0 && rng.bernoulli(config.stockout_probability)) {
                y = 0;
            }
            series.values.push_back(std::max(0L, y));
        }
        out.push_back(std::move(series));
    }
    return out;
}

std::vector<ForecastRecord> baseline_forecast(const std::vector<Product>& catalog,
                                              const WeekId& start_week, int n_weeks,
                                              int lead_time_weeks, const WorldConfig& config) {
    if (lead_time_weeks < 1) throw std::invalid_argument("lead_time_weeks must be >= 1");
    DemandModel model(config);
    std::vector<ForecastRecord> out;
    out.reserve(catalog.size() * static_cast<size_t>(n_weeks));
    for (const Product& p : catalog) {
        for (int k = 0; k < n_weeks; ++k) {
            WeekId target = add_weeks(start_week, k);
            ForecastRecord rec;
            rec.product_id = p.product_id;
            rec.target_week = target;
            rec.creation_week = add_weeks(target, -lead_time_weeks);
            rec.p50 = model.mean_path(p, target);
            rec.p90 = rec.p50 * config.baseline_p90_ratio;
            out.push_back(rec);
        }
    }
    return out;
}

World build_world(const WorldConfig& config, int n_weeks, int lead_time_weeks) {
    World world;
    world.config = config;
    world.catalog = generate_catalog(config);
    WeekId start{config.first_week_start};
    world.demand = simulate_demand(world.catalog, start, n_weeks, config);
    world.forecasts = baseline_forecast(world.catalog, start, n_weeks, lead_time_weeks, config);
    return world;
}

// --- persistence -----------------------------------------------------------

std::string catalog_to_jsonl(const std::vector<Product>& catalog) {
    std::string out;
    for (const Product& p : catalog) {
        nlohmann::json j;
        j["product_id"] = p.product_id;
        j["title"] = p.title;
        j["description"] = p.description;
        j["bullet_points"] = p.bullet_points;
        j["list_price"] = p.list_price;
        j["created_at"] = to_iso(p.created_at);
        j["product_group"] = p.product_group;
        if (p.holiday_affinity) {
            j["holiday_affinity"] = {
                {"holiday", holiday_canonical_name(p.holiday_affinity->holiday)},
                {"surge_multiplier", p.holiday_affinity->surge_multiplier},
                {"surge_window_weeks", p.holiday_affinity->surge_window_weeks},
            };
        } else {
            j["holiday_affinity"] = nullptr;
        }
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<Product> catalog_from_jsonl(const std::string& jsonl) {
    std::vector<Product> out;
    std::istringstream in(jsonl);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Product p;
        p.product_id = j.at("product_id").get<std::string>();
        p.title = j.at("title").get<std::string>();
        p.description = j.at("description").get<std::string>();
        p.bullet_points = j.at("bullet_points").get<std::vector<std::string>>();
        p.list_price = j.at("list_price").get<double>();
        p.created_at = parse_iso(j.at("created_at").get<std::string>());
        p.product_group = j.at("product_group").get<std::string>();
        if (!j.at("holiday_affinity").is_null()) {
            const auto& a = j.at("holiday_affinity");
            p.holiday_affinity = HolidayAffinity{
                holiday_from_name(a.at("holiday").get<std::string>()),
                a.at("surge_multiplier").get<double>(),
                a.at("surge_window_weeks").get<int>(),
            };
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::string demand_to_csv(const std::vector<DemandSeries>& demand) {
    std::string out = "product_id,week_start,value\n";
    for (const DemandSeries& s : demand) {
        for (int k = 0; k < s.n_weeks(); ++k) {
            out += to_csv_line({s.product_id, to_iso(s.week_at(k).start_date),
                                std::to_string(s.values[static_cast<size_t>(k)])});
        }
    }
    return out;
}

std::vector<DemandSeries> demand_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty demand CSV");
    std::map<std::string, std::map<long, long>> by_product;  // serial day -> y
    std::vector<std::string> id_order;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, week, value;
        std::getline(ls, id, ',');
        std::getline(ls, week, ',');
        std::getline(ls, value, ',');
        if (by_product.find(id) == by_product.end()) id_order.push_back(id);
        by_product[id][days_from_civil(parse_iso(week))] = std::stol(value);
    }
    std::vector<DemandSeries> out;
    for (const std::string& id : id_order) {
        const auto& weeks = by_product[id];
        DemandSeries s;
        s.product_id = id;
        s.first_week = WeekId{civil_from_days(weeks.begin()->first)};
        long expected = weeks.begin()->first;
        for (const auto& [serial, y] : weeks) {
            if (serial != expected) {
                throw std::runtime_error("demand series for " + id + " is not contiguous at " +
                                         to_iso(civil_from_days(serial)));
            }
            s.values.push_back(y);
            expected += 7;
        }
        out.push_back(std::move(s));
    }
    return out;
}

std::string forecasts_to_csv(const std::vector<ForecastRecord>& forecasts,
                             int /*lead_time_weeks*/) {
    std::string out = "product_id,week_start,value,p90\n";
    for (const ForecastRecord& f : forecasts) {
        out += to_csv_line({f.product_id, to_iso(f.target_week.start_date),
                            format_double(f.p50), format_double(f.p90)});
    }
    return out;
}

std::vector<ForecastRecord> forecasts_from_csv(const std::string& csv, int lead_time_weeks) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty forecast CSV");
    if (line.rfind("product_id,week_start,value", 0) != 0) {
        throw std::runtime_error("unexpected forecast CSV header: " + line);
    }
    std::vector<ForecastRecord> out;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string id, week, p50, p90;
        std::getline(ls, id, ',');
        std::getline(ls, week, ',');
        std::getline(ls, p50, ',');
        std::getline(ls, p90, ',');
        ForecastRecord rec;
        rec.product_id = id;
        rec.target_week = WeekId{parse_iso(week)};
        rec.creation_week = add_weeks(rec.target_week, -lead_time_weeks);
        rec.p50 = std::stod(p50);
        rec.p90 = p90.empty() ? rec.p50 : std::stod(p90);
        out.push_back(rec);
    }
    return out;
}

}  // namespace surgecal
