#include "vsfleet/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "vsfleet/error.hpp"
#include "vsfleet/random.hpp"

namespace vsfleet {

namespace {

using nlohmann::json;

constexpr std::int64_t kWindowStart = 1423267200;  // 2015-02-07T00:00:00Z
constexpr std::int64_t kWindowSeconds = 3 * 24 * 3600;

json owm_record(std::int64_t id, const std::string& name, const std::string& country, const GeoPoint& at,
                double temp, double pressure, double humidity, std::int64_t dt) {
    return json{
        {"coord", {{"lon", at.longitude()}, {"lat", at.latitude()}}},
        {"sys", {{"country", country}}},
        {"main", {{"temp", temp}, {"humidity", humidity}, {"pressure", pressure}}},
        {"base", "stations"},
        {"dt", dt},
        {"id", id},
        {"name", name},
        {"cod", 200},
    };
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + p.string());
    return out;
}

}  // namespace

const std::vector<FixtureCity>& case_study_cities() {
    static const std::vector<FixtureCity> cities = {
        {9000001, "europe", {"Vlore", "AL", 283.54, 1015.59, 100.00}, GeoPoint(40.47, 19.49)},
        {9000002, "europe", {"Bari", "IT", 283.29, 1022.26, 100.00}, GeoPoint(41.12, 16.87)},
        {9000003, "europe", {"Gijon", "ES", 282.52, 1038.20, 100.00}, GeoPoint(43.54, -5.66)},
        {9000004, "europe", {"Joensuu", "FI", 266.78, 998.36, 80.62}, GeoPoint(62.60, 29.76)},
        {9000005, "europe", {"Kuusamo", "FI", 265.65, 974.30, 82.79}, GeoPoint(65.97, 29.19)},
        {9000006, "europe", {"Longyearbyen", "SJ", 246.35, 966.72, 60.51}, GeoPoint(78.22, 15.64)},
        {9000007, "north-america", {"Phoenix", "US", 291.42, 966.45, 48.93}, GeoPoint(33.45, -112.07)},
        {9000008, "north-america", {"Mexicali", "MX", 290.61, 1025.91, 54.17}, GeoPoint(32.62, -115.45)},
        {9000009, "north-america", {"Hamilton", "BM", 290.34, 1033.54, 100.00}, GeoPoint(32.29, -64.78)},
        {9000010, "north-america", {"Whitehorse", "CA", 242.15, 865.08, 53.63}, GeoPoint(60.72, -135.06)},
        {9000011, "north-america", {"Yellowknife", "CA", 239.80, 1011.24, 52.47}, GeoPoint(62.45, -114.37)},
        {9000012, "north-america", {"Fairbanks", "US", 233.18, 999.01, 16.30}, GeoPoint(64.84, -147.72)},
    };
    return cities;
}

const std::vector<FixtureRegionSpec>& fixture_region_specs() {
    static const std::vector<FixtureRegionSpec> specs = {
        {"europe", Region(GeoPoint(80, -30), GeoPoint(40, 30)), 5184},
        {"north-america", Region(GeoPoint(70, -170), GeoPoint(30, -60)), 2862},
    };
    return specs;
}

void write_owm_fixtures(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    json regions = json::array();
    for (const auto& spec : fixture_region_specs()) {
        regions.push_back({{"slug", spec.slug}, {"region", spec.region}});

        std::vector<const FixtureCity*> named;
        double t_lo = 1e9, t_hi = -1e9;
        for (const auto& c : case_study_cities()) {
            if (c.region != spec.slug) continue;
            named.push_back(&c);
            t_lo = std::min(t_lo, c.reading.temperature);
            t_hi = std::max(t_hi, c.reading.temperature);
        }

        auto out = open_out(dir / (spec.slug + ".owm.ndjson"));
        for (const auto* c : named)
            out << owm_record(c->id, c->reading.city, c->reading.country, c->location, c->reading.temperature,
                              c->reading.pressure, c->reading.humidity, kWindowStart)
                       .dump()
                << '\n';

        // Background stations sit strictly inside the named cities' temperature span.
        SeededStream rng({0x6669787475726573, spec.stations});
        const std::int64_t first_id = spec.slug == "europe" ? 2000001 : 5000001;
        for (std::size_t k = named.size(); k < spec.stations; ++k) {
            const auto id = first_id + static_cast<std::int64_t>(k);
            GeoPoint at(round2(rng.uniform(spec.region.min_latitude(), spec.region.max_latitude())),
                        round2(rng.uniform(spec.region.min_longitude(), spec.region.max_longitude())));
            const double temp = round2(rng.uniform(t_lo + 0.5, t_hi - 0.5));
            const double pressure = round2(rng.uniform(960.0, 1040.0));
            const double humidity = round2(rng.uniform(20.0, 100.0));
            const auto dt = kWindowStart + static_cast<std::int64_t>(rng.below(kWindowSeconds));
            out << owm_record(id, "Station", "ZZ", at, temp, pressure, humidity, dt).dump()
                << '\n';
        }
        if (!out.flush()) throw Error(ErrorCode::io_error, "short write in " + spec.slug + " fixture");
    }
    auto regions_out = open_out(dir / "regions.json");
    regions_out << json{{"regions", regions}}.dump(2) << '\n';

    std::vector<CityReading> readings;
    for (const auto& c : case_study_cities()) readings.push_back(c.reading);
    auto csv = open_out(dir / "case_study_cities.csv");
    write_city_csv(csv, readings);
}

}  // namespace vsfleet
