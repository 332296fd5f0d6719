#pragma once

// Ranks cities by weather suitability for rheumatic diseases.
//
// Every disease is hurt by low temperature; osteoarthritis also by high
// humidity, arthritis by high humidity and high pressure, fibromyalgia by
// high pressure. Each harmful condition becomes a TOPSIS criterion direction.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vsfleet/topsis.hpp"

namespace vsfleet {

enum class Disease { osteoarthritis, arthritis, fibromyalgia };

Disease parse_disease(std::string_view name);
std::string_view to_string(Disease d) noexcept;

struct CityReading {
    std::string city;
    std::string country;
    double temperature = 0.0;  // kelvin
    double pressure = 0.0;  // hPa
    double humidity = 0.0;  // percent

    void validate() const;
};

struct TimedReading {
    std::int64_t observed_at = 0;
    CityReading reading;
};

/// Criteria over "temperature", "humidity" and "pressure".
struct DiseaseProfile {
    Disease disease = Disease::arthritis;
    std::vector<CriterionSpec> criteria;

    static DiseaseProfile for_disease(Disease d);
};

/// Decision matrix for `profile`. The temperature column is expressed in
/// degrees Celsius: on the kelvin scale the absolute-zero offset squeezes the
/// normalized column until temperature barely separates cities.
DecisionMatrix city_matrix(std::span<const CityReading> readings, const DiseaseProfile& profile);

struct CityRank {
    std::string city;
    std::string country;
    double closeness = 0.0;
};

/// Best city first. Throws Error(empty_readings) or Error(duplicate_city).
std::vector<CityRank> rank_cities(std::span<const CityReading> readings, const DiseaseProfile& profile);

/// Per-city arithmetic means over samples with start <= observed_at <= end,
/// in order of each city's first sample. Cities without samples are omitted.
std::vector<CityReading> windowed_means(std::span<const TimedReading> samples, std::int64_t start, std::int64_t end);

/// CSV with header `city,country,temp_k,pressure_hpa,humidity_pct`.
std::vector<CityReading> read_city_csv(std::istream& in);
void write_city_csv(std::ostream& out, std::span<const CityReading> readings);

/// `rank,city,country,closeness`.
void write_ranking_csv(std::ostream& out, std::span<const CityRank> ranking);

}  // namespace vsfleet
