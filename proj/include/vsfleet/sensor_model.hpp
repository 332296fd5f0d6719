#pragma once

// Repository-neutral sensor types shared by every stage of the pipeline.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace vsfleet {

class GeoPoint {
public:
    GeoPoint() = default;
    /// Throws Error(invalid_argument) outside [-90,90] x [-180,180] or for non-finite input.
    GeoPoint(double latitude, double longitude);

    double latitude() const noexcept { return latitude_; }
    double longitude() const noexcept { return longitude_; }

    bool operator==(const GeoPoint&) const = default;

private:
    double latitude_ = 0.0;
    double longitude_ = 0.0;
};

/// Closed latitude/longitude box given by its north-west and south-east corners.
/// Boxes never wrap the antimeridian.
class Region {
public:
    Region() = default;
    Region(GeoPoint north_west, GeoPoint south_east);

    /// Box from plain bounds, as used by the bbox query parameters.
    static Region from_bounds(double min_lon, double max_lon, double min_lat, double max_lat);

    const GeoPoint& north_west() const noexcept { return north_west_; }
    const GeoPoint& south_east() const noexcept { return south_east_; }

    double min_longitude() const noexcept { return north_west_.longitude(); }
    double max_longitude() const noexcept { return south_east_.longitude(); }
    double min_latitude() const noexcept { return south_east_.latitude(); }
    double max_latitude() const noexcept { return north_west_.latitude(); }

    bool contains(const GeoPoint& p) const noexcept;
    bool contains(const Region& other) const noexcept;
    bool intersects(const Region& other) const noexcept;

    bool operator==(const Region&) const = default;

private:
    GeoPoint north_west_;
    GeoPoint south_east_;
};

inline bool region_contains(const Region& region, const GeoPoint& p) noexcept {
    return region.contains(p);
}

/// The six context properties used as selection criteria. Units are this
/// project's conventions: percent, currency units, unit fraction, hertz,
/// milliwatts and milliseconds.
struct ContextVector {
    double battery = 100.0;
    double price = 0.0;
    double drift = 0.0;
    double frequency = 1.0;
    double energy_consumption = 0.0;
    double response_time = 0.0;

    /// Throws Error(validation_failed) naming the first field out of range.
    void validate() const;

    bool operator==(const ContextVector&) const = default;
};

/// Names of the ContextVector fields, in declaration order.
std::span<const std::string_view> context_field_names() noexcept;

/// Value of the named ContextVector field; throws Error(unknown_criterion).
double context_value(const ContextVector& context, std::string_view field);

struct Measurements {
    std::string city;
    std::string country;
    std::string base;
    double temperature = 273.15;  // kelvin
    std::optional<double> sea_level;  // hPa
    double pressure = 1013.0;  // hPa
    double humidity = 0.0;  // percent

    void validate() const;

    bool operator==(const Measurements&) const = default;
};

struct GenericSensor {
    std::int64_t id = 0;
    std::string name;
    GeoPoint location;
    Measurements measurements;
    ContextVector context;
    std::string source_url;
    std::int64_t observed_at = 0;  // unix seconds

    void validate() const;

    bool operator==(const GenericSensor&) const = default;
};

// Canonical interchange encoding.
void to_json(nlohmann::json& j, const GeoPoint& p);
void from_json(const nlohmann::json& j, GeoPoint& p);
void to_json(nlohmann::json& j, const Region& r);
void from_json(const nlohmann::json& j, Region& r);
void to_json(nlohmann::json& j, const ContextVector& c);
void from_json(const nlohmann::json& j, ContextVector& c);
void to_json(nlohmann::json& j, const Measurements& m);
void from_json(const nlohmann::json& j, Measurements& m);
void to_json(nlohmann::json& j, const GenericSensor& s);
void from_json(const nlohmann::json& j, GenericSensor& s);

std::string encode_sensor(const GenericSensor& sensor);
GenericSensor decode_sensor(std::string_view text);

/// JSON array of canonical sensor objects.
std::string encode_sensors(std::span<const GenericSensor> sensors);

}  // namespace vsfleet
