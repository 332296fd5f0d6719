#include <doctest.h>

#include <json.hpp>

#include "vsfleet/error.hpp"
#include "vsfleet/repository.hpp"
#include "vsfleet/sensor_model.hpp"

using namespace vsfleet;

namespace {

const Region kEurope(GeoPoint(80, -30), GeoPoint(40, 30));

GenericSensor tartu() {
    GenericSensor s;
    s.id = 588335;
    s.name = "Tartu";
    s.location = GeoPoint(58.380619, 26.72509);
    s.measurements = {"Tartu", "EE", "stations", 271.4, 1020.5, 1012.0, 93.0};
    s.context = {88.0, 1.5, 0.01, 2.0, 40.0, 120.0};
    s.source_url = owm_query_url(588335);
    s.observed_at = 1423300000;
    return s;
}

}  // namespace

TEST_CASE("geo point rejects out-of-range coordinates") {
    CHECK_NOTHROW(GeoPoint(90, 180));
    CHECK_NOTHROW(GeoPoint(-90, -180));
    CHECK_THROWS_AS(GeoPoint(90.5, 0), Error);
    CHECK_THROWS_AS(GeoPoint(0, -180.01), Error);
    CHECK_THROWS_AS(GeoPoint(std::nan(""), 0), Error);
}

TEST_CASE("region requires north-west above and left of south-east") {
    CHECK_THROWS_AS(Region(GeoPoint(40, -30), GeoPoint(80, 30)), Error);
    CHECK_THROWS_AS(Region(GeoPoint(80, 30), GeoPoint(40, -30)), Error);
    CHECK_NOTHROW(Region(GeoPoint(10, 10), GeoPoint(10, 10)));
}

TEST_CASE("region_contains") {
    // Tartu, skeleton descriptor coordinates with latitude and longitude in their proper places.
    CHECK(region_contains(kEurope, GeoPoint(58.38, 26.72)));
    CHECK(region_contains(kEurope, kEurope.north_west()));
    CHECK(region_contains(kEurope, kEurope.south_east()));
    // Shuzenji: longitude 139 lies east of 30.
    CHECK_FALSE(region_contains(kEurope, GeoPoint(35, 139)));
    CHECK_FALSE(region_contains(kEurope, GeoPoint(39.999, 0)));
}

TEST_CASE("containment is monotone under box enlargement") {
    const Region inner(GeoPoint(60, -10), GeoPoint(45, 10));
    const Region outer(GeoPoint(70, -20), GeoPoint(40, 20));
    REQUIRE(outer.contains(inner));
    for (double lat = 30; lat <= 80; lat += 2.5)
        for (double lon = -40; lon <= 40; lon += 2.5)
            if (region_contains(inner, GeoPoint(lat, lon))) CHECK(region_contains(outer, GeoPoint(lat, lon)));
}

TEST_CASE("from_bounds matches corner construction") {
    CHECK(Region::from_bounds(-30, 30, 40, 80) == kEurope);
}

TEST_CASE("context and measurement validation") {
    ContextVector c;
    CHECK_NOTHROW(c.validate());
    c.battery = 101;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.frequency = 0;
    CHECK_THROWS_AS(c.validate(), Error);
    c = {};
    c.drift = -0.1;
    CHECK_THROWS_AS(c.validate(), Error);

    Measurements m;
    m.humidity = 100.5;
    CHECK_THROWS_AS(m.validate(), Error);
    m = {};
    m.temperature = 0;
    CHECK_THROWS_AS(m.validate(), Error);
    m = {};
    m.pressure = -1;
    CHECK_THROWS_AS(m.validate(), Error);
}

TEST_CASE("sensor requires a source url") {
    auto s = tartu();
    CHECK_NOTHROW(s.validate());
    s.source_url.clear();
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("context_value by name") {
    ContextVector c{50, 2, 0.03, 4, 10, 20};
    CHECK(context_value(c, "battery") == 50);
    CHECK(context_value(c, "response_time") == 20);
    CHECK(context_field_names().size() == 6);
    try {
        context_value(c, "latency");
        FAIL("expected unknown criterion");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::unknown_criterion);
    }
}

TEST_CASE("canonical encoding round-trips") {
    const auto s = tartu();
    CHECK(decode_sensor(encode_sensor(s)) == s);

    auto no_sea = s;
    no_sea.measurements.sea_level.reset();
    CHECK(decode_sensor(encode_sensor(no_sea)) == no_sea);

    for (const auto& g : generate_synthetic(200, kEurope, 11)) CHECK(decode_sensor(encode_sensor(g)) == g);
}

TEST_CASE("canonical encoding uses the documented field names") {
    auto j = nlohmann::json::parse(encode_sensor(tartu()));
    for (const char* key : {"id", "name", "location", "measurements", "context", "source_url", "observed_at"})
        CHECK(j.contains(key));
    CHECK(j["location"]["latitude"] == 58.380619);
    CHECK(j["measurements"]["temperature"] == 271.4);
    CHECK(j["context"]["energy_consumption"] == 40.0);
}

TEST_CASE("decode rejects malformed text") {
    CHECK_THROWS_AS(decode_sensor("{"), Error);
    CHECK_THROWS_AS(decode_sensor(R"({"id": 1})"), Error);
}
