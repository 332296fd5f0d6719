#include "vsfleet/sensor_model.hpp"

#include <array>
#include <cmath>

#include <json.hpp>

#include "vsfleet/error.hpp"

namespace vsfleet {

namespace {

void require(bool ok, const char* field, const char* rule) {
    if (!ok) throw Error(ErrorCode::validation_failed, std::string(field) + " " + rule);
}

constexpr std::array<std::string_view, 6> kContextFields = {
    "battery", "price", "drift", "frequency", "energy_consumption", "response_time"};

}  // namespace

GeoPoint::GeoPoint(double latitude, double longitude) : latitude_(latitude), longitude_(longitude) {
    if (!std::isfinite(latitude) || latitude < -90.0 || latitude > 90.0)
        throw Error(ErrorCode::invalid_argument, "latitude out of range: " + std::to_string(latitude));
    if (!std::isfinite(longitude) || longitude < -180.0 || longitude > 180.0)
        throw Error(ErrorCode::invalid_argument, "longitude out of range: " + std::to_string(longitude));
}

Region::Region(GeoPoint north_west, GeoPoint south_east) : north_west_(north_west), south_east_(south_east) {
    if (north_west.latitude() < south_east.latitude())
        throw Error(ErrorCode::invalid_argument, "region initial latitude must be north of final latitude");
    if (north_west.longitude() > south_east.longitude())
        throw Error(ErrorCode::invalid_argument, "region initial longitude must be west of final longitude");
}

Region Region::from_bounds(double min_lon, double max_lon, double min_lat, double max_lat) {
    return Region(GeoPoint(max_lat, min_lon), GeoPoint(min_lat, max_lon));
}

bool Region::contains(const GeoPoint& p) const noexcept {
    return min_latitude() <= p.latitude() && p.latitude() <= max_latitude() &&
           min_longitude() <= p.longitude() && p.longitude() <= max_longitude();
}

bool Region::contains(const Region& other) const noexcept {
    return contains(other.north_west_) && contains(other.south_east_);
}

bool Region::intersects(const Region& other) const noexcept {
    return min_latitude() <= other.max_latitude() && other.min_latitude() <= max_latitude() &&
           min_longitude() <= other.max_longitude() && other.min_longitude() <= max_longitude();
}

void ContextVector::validate() const {
    require(std::isfinite(battery) && battery >= 0.0 && battery <= 100.0, "battery", "must be in [0,100]");
    require(std::isfinite(price) && price >= 0.0, "price", "must be >= 0");
    require(std::isfinite(drift) && drift >= 0.0, "drift", "must be >= 0");
    require(std::isfinite(frequency) && frequency > 0.0, "frequency", "must be > 0");
    require(std::isfinite(energy_consumption) && energy_consumption >= 0.0, "energy_consumption", "must be >= 0");
    require(std::isfinite(response_time) && response_time >= 0.0, "response_time", "must be >= 0");
}

std::span<const std::string_view> context_field_names() noexcept { return kContextFields; }

double context_value(const ContextVector& c, std::string_view field) {
    if (field == "battery") return c.battery;
    if (field == "price") return c.price;
    if (field == "drift") return c.drift;
    if (field == "frequency") return c.frequency;
    if (field == "energy_consumption") return c.energy_consumption;
    if (field == "response_time") return c.response_time;
    throw Error(ErrorCode::unknown_criterion, std::string(field));
}

void Measurements::validate() const {
    require(std::isfinite(temperature) && temperature > 0.0, "temperature", "must be > 0 K");
    require(std::isfinite(humidity) && humidity >= 0.0 && humidity <= 100.0, "humidity", "must be in [0,100]");
    require(std::isfinite(pressure) && pressure > 0.0, "pressure", "must be > 0");
    if (sea_level) require(std::isfinite(*sea_level) && *sea_level > 0.0, "sea_level", "must be > 0");
}

void GenericSensor::validate() const {
    require(!source_url.empty(), "source_url", "must not be empty");
    measurements.validate();
    context.validate();
}

void to_json(nlohmann::json& j, const GeoPoint& p) {
    j = {{"latitude", p.latitude()}, {"longitude", p.longitude()}};
}

void from_json(const nlohmann::json& j, GeoPoint& p) {
    p = GeoPoint(j.at("latitude").get<double>(), j.at("longitude").get<double>());
}

void to_json(nlohmann::json& j, const Region& r) {
    j = {{"initial", r.north_west()}, {"final", r.south_east()}};
}

void from_json(const nlohmann::json& j, Region& r) {
    r = Region(j.at("initial").get<GeoPoint>(), j.at("final").get<GeoPoint>());
}

void to_json(nlohmann::json& j, const ContextVector& c) {
    j = {{"battery", c.battery},
         {"price", c.price},
         {"drift", c.drift},
         {"frequency", c.frequency},
         {"energy_consumption", c.energy_consumption},
         {"response_time", c.response_time}};
}

void from_json(const nlohmann::json& j, ContextVector& c) {
    j.at("battery").get_to(c.battery);
    j.at("price").get_to(c.price);
    j.at("drift").get_to(c.drift);
    j.at("frequency").get_to(c.frequency);
    j.at("energy_consumption").get_to(c.energy_consumption);
    j.at("response_time").get_to(c.response_time);
}

void to_json(nlohmann::json& j, const Measurements& m) {
    j = {{"city", m.city},
         {"country", m.country},
         {"base", m.base},
         {"temperature", m.temperature},
         {"pressure", m.pressure},
         {"humidity", m.humidity}};
    if (m.sea_level) j["sea_level"] = *m.sea_level;
}

void from_json(const nlohmann::json& j, Measurements& m) {
    j.at("city").get_to(m.city);
    j.at("country").get_to(m.country);
    j.at("base").get_to(m.base);
    j.at("temperature").get_to(m.temperature);
    j.at("pressure").get_to(m.pressure);
    j.at("humidity").get_to(m.humidity);
    if (auto it = j.find("sea_level"); it != j.end() && !it->is_null())
        m.sea_level = it->get<double>();
    else
        m.sea_level.reset();
}

void to_json(nlohmann::json& j, const GenericSensor& s) {
    j = {{"id", s.id},
         {"name", s.name},
         {"location", s.location},
         {"measurements", s.measurements},
         {"context", s.context},
         {"source_url", s.source_url},
         {"observed_at", s.observed_at}};
}

void from_json(const nlohmann::json& j, GenericSensor& s) {
    j.at("id").get_to(s.id);
    j.at("name").get_to(s.name);
    s.location = j.at("location").get<GeoPoint>();
    s.measurements = j.at("measurements").get<Measurements>();
    s.context = j.at("context").get<ContextVector>();
    j.at("source_url").get_to(s.source_url);
    j.at("observed_at").get_to(s.observed_at);
}

std::string encode_sensor(const GenericSensor& sensor) { return nlohmann::json(sensor).dump(); }

GenericSensor decode_sensor(std::string_view text) {
    try {
        return nlohmann::json::parse(text).get<GenericSensor>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::unparseable_payload, e.what());
    }
}

std::string encode_sensors(std::span<const GenericSensor> sensors) {
    std::string out = "[";
    for (std::size_t i = 0; i < sensors.size(); ++i) {
        if (i) out += ",\n";
        out += encode_sensor(sensors[i]);
    }
    out += "]";
    return out;
}

}  // namespace vsfleet
