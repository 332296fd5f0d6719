#pragma once

// Shipped offline fixtures: per-region OpenWeatherMap station dumps and the
// twelve extreme-temperature cities of the case study.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vsfleet/analysis.hpp"
#include "vsfleet/sensor_model.hpp"

namespace vsfleet {

struct FixtureCity {
    std::int64_t id;
    std::string region;  // fixture slug
    CityReading reading;
    GeoPoint location;
};

/// Mean readings of the hottest and coldest cities per region, 7-9 Feb 2015.
const std::vector<FixtureCity>& case_study_cities();

struct FixtureRegionSpec {
    std::string slug;
    Region region;
    std::size_t stations;
};

/// Europe (5184 stations) and North America (2862 stations).
const std::vector<FixtureRegionSpec>& fixture_region_specs();

/// Writes regions.json, <slug>.owm.ndjson and case_study_cities.csv into `dir`.
/// Output is byte-identical across runs. Background stations are drawn so
/// that the case-study cities remain each region's temperature extremes.
void write_owm_fixtures(const std::filesystem::path& dir);

}  // namespace vsfleet
