#include "vsfleet/repository.hpp"

#include <array>
#include <ctime>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "vsfleet/error.hpp"
#include "vsfleet/http.hpp"
#include "vsfleet/random.hpp"

namespace vsfleet {

using nlohmann::json;

namespace {

constexpr std::array<FieldRange, 6> kContextRanges = {{
    {"battery", 0.0, 100.0},
    {"price", 0.0, 10.0},
    {"drift", 0.0, 0.05},
    {"frequency", 0.1, 10.0},
    {"energy_consumption", 1.0, 500.0},
    {"response_time", 1.0, 2000.0},
}};

constexpr std::uint64_t kContextStreamKey = 0x636f6e7465787431ULL;
constexpr std::uint64_t kSyntheticStreamKey = 0x73796e7468657469ULL;
constexpr std::int64_t kSyntheticEpoch = 1423267200;  // 2015-02-07T00:00:00Z

std::int64_t now_seconds() { return static_cast<std::int64_t>(std::time(nullptr)); }

ContextVector draw_context(SeededStream& rng) {
    ContextVector c;
    c.battery = rng.uniform(kContextRanges[0].low, kContextRanges[0].high);
    c.price = rng.uniform(kContextRanges[1].low, kContextRanges[1].high);
    c.drift = rng.uniform(kContextRanges[2].low, kContextRanges[2].high);
    c.frequency = rng.uniform(kContextRanges[3].low, kContextRanges[3].high);
    c.energy_consumption = rng.uniform(kContextRanges[4].low, kContextRanges[4].high);
    c.response_time = rng.uniform(kContextRanges[5].low, kContextRanges[5].high);
    return c;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Location of an OpenWeatherMap record, if it carries a usable one.
std::optional<GeoPoint> owm_location(const json& record) {
    try {
        const auto& coord = record.at("coord");
        return GeoPoint(coord.at("lat").get<double>(), coord.at("lon").get<double>());
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<GenericSensor> sensor_from_owm(const json& record) {
    try {
        GenericSensor s;
        s.id = record.at("id").get<std::int64_t>();
        s.name = record.at("name").get<std::string>();
        auto location = owm_location(record);
        if (!location) return std::nullopt;
        s.location = *location;

        const auto& main = record.at("main");
        s.measurements.city = s.name;
        if (auto sys = record.find("sys"); sys != record.end() && sys->contains("country"))
            s.measurements.country = sys->at("country").get<std::string>();
        if (auto base = record.find("base"); base != record.end()) s.measurements.base = base->get<std::string>();
        s.measurements.temperature = main.at("temp").get<double>();
        s.measurements.humidity = main.at("humidity").get<double>();
        s.measurements.pressure = main.at("pressure").get<double>();
        if (auto sea = main.find("sea_level"); sea != main.end() && !sea->is_null())
            s.measurements.sea_level = sea->get<double>();

        if (auto ctx = record.find("context"); ctx != record.end())
            s.context = ctx->get<ContextVector>();
        else
            s.context = synthesize_context(s.id);

        s.source_url = owm_query_url(s.id);
        if (auto dt = record.find("dt"); dt != record.end()) s.observed_at = dt->get<std::int64_t>();
        s.validate();
        return s;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::optional<GenericSensor> sensor_from_canonical(const json& record) {
    try {
        auto s = record.get<GenericSensor>();
        s.validate();
        return s;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

class BatchCollector {
public:
    explicit BatchCollector(bool canonical) : canonical_(canonical) {}

    void add(const json& record) {
        ++result_.records;
        auto sensor = canonical_ ? sensor_from_canonical(record) : sensor_from_owm(record);
        if (!sensor || !seen_.insert(sensor->id).second) {
            ++result_.skipped;
            return;
        }
        result_.sensors.push_back(std::move(*sensor));
    }

    void add_unparseable() {
        ++result_.records;
        ++result_.skipped;
    }

    UnmarshalResult take() { return std::move(result_); }

private:
    bool canonical_;
    std::unordered_set<std::int64_t> seen_;
    UnmarshalResult result_;
};

void collect_document(const json& doc, BatchCollector& out) {
    if (doc.is_array()) {
        for (const auto& record : doc) out.add(record);
    } else {
        out.add(doc);
    }
}

}  // namespace

void RepositoryQuery::validate() const {
    if (limit && *limit == 0) throw ValidationError("limit", "must be >= 1");
}

std::span<const FieldRange> synthetic_context_ranges() noexcept { return kContextRanges; }

ContextVector synthesize_context(std::int64_t sensor_id) {
    SeededStream rng({kContextStreamKey, static_cast<std::uint64_t>(sensor_id)});
    return draw_context(rng);
}

std::string owm_query_url(std::int64_t station_id) {
    return "http://api.openweathermap.org/data/2.5/weather?id=" + std::to_string(station_id);
}

std::vector<GenericSensor> generate_synthetic(std::size_t count, const Region& region, std::uint64_t seed) {
    if (count == 0) throw Error(ErrorCode::invalid_argument, "synthetic count must be >= 1");
    SeededStream rng({kSyntheticStreamKey, seed, count, bits_of(region.min_longitude()),
                      bits_of(region.max_longitude()), bits_of(region.min_latitude()),
                      bits_of(region.max_latitude())});
    std::vector<GenericSensor> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        GenericSensor s;
        s.id = static_cast<std::int64_t>(i + 1);
        s.name = "Synthetic";
        double lat = rng.uniform(region.min_latitude(), region.max_latitude());
        double lon = rng.uniform(region.min_longitude(), region.max_longitude());
        s.location = GeoPoint(lat, lon);
        s.measurements.city = s.name;
        s.measurements.country = "ZZ";
        s.measurements.base = "synthetic";
        s.measurements.temperature = rng.uniform(230.0, 320.0);
        s.measurements.pressure = rng.uniform(950.0, 1050.0);
        s.measurements.sea_level = s.measurements.pressure + rng.uniform(0.0, 30.0);
        s.measurements.humidity = rng.uniform(0.0, 100.0);
        s.context = draw_context(rng);
        s.source_url = owm_query_url(s.id);
        s.observed_at = kSyntheticEpoch;
        out.push_back(std::move(s));
    }
    return out;
}

UnmarshalResult unmarshal(const RawBatch& batch) {
    const bool canonical = batch.media_type == kMediaGenericSensors;
    if (!canonical && batch.media_type != kMediaOwmJson && batch.media_type != kMediaOwmNdjson)
        throw Error(ErrorCode::malformed_media_type, batch.media_type);

    BatchCollector collector(canonical);
    if (batch.media_type == kMediaOwmNdjson) {
        std::size_t parsed = 0;
        std::size_t lines = 0;
        std::string_view rest = batch.payload;
        while (!rest.empty()) {
            auto nl = rest.find('\n');
            auto line = rest.substr(0, nl);
            rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
            if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
            ++lines;
            auto doc = json::parse(line, nullptr, false);
            if (doc.is_discarded()) {
                collector.add_unparseable();
                continue;
            }
            ++parsed;
            collector.add(doc);
        }
        if (lines > 0 && parsed == 0) throw Error(ErrorCode::unparseable_payload, "no NDJSON line parses");
        return collector.take();
    }

    auto doc = json::parse(batch.payload, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::unparseable_payload, "payload is not JSON");
    if (canonical && !doc.is_array()) throw Error(ErrorCode::unparseable_payload, "expected a JSON array of sensors");
    collect_document(doc, collector);
    return collector.take();
}

FixtureAdapter::FixtureAdapter(std::filesystem::path directory) : directory_(std::move(directory)) {
    auto index = json::parse(read_file(directory_ / "regions.json"), nullptr, false);
    if (index.is_discarded() || !index.contains("regions"))
        throw Error(ErrorCode::io_error, "bad fixture index in " + directory_.string());
    for (const auto& entry : index.at("regions"))
        regions_.push_back({entry.at("slug").get<std::string>(), entry.at("region").get<Region>()});
}

RawBatch FixtureAdapter::send(const RepositoryQuery& query) const {
    query.validate();
    RawBatch batch{{}, std::string(kMediaOwmNdjson), now_seconds()};
    bool matched = false;
    std::size_t emitted = 0;
    for (const auto& fixture : regions_) {
        if (!fixture.region.intersects(query.region)) continue;
        auto path = directory_ / (fixture.slug + ".owm.ndjson");
        if (!std::filesystem::exists(path)) continue;
        matched = true;
        std::istringstream lines(read_file(path));
        for (std::string line; std::getline(lines, line);) {
            if (query.limit && emitted >= *query.limit) break;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            auto doc = json::parse(line, nullptr, false);
            if (!doc.is_discarded()) {
                auto where = owm_location(doc);
                if (where && !query.region.contains(*where)) continue;
            }
            batch.payload += line;
            batch.payload += '\n';
            ++emitted;
        }
    }
    if (!matched) throw Error(ErrorCode::no_fixture_for_region, "no fixture covers the requested region");
    return batch;
}

RawBatch SyntheticAdapter::send(const RepositoryQuery& query) const {
    query.validate();
    auto sensors = generate_synthetic(query.limit.value_or(default_count_), query.region, seed_);
    return RawBatch{encode_sensors(sensors), std::string(kMediaGenericSensors), now_seconds()};
}

LiveOwmAdapter::LiveOwmAdapter(std::string base_url, std::vector<std::int64_t> station_ids, std::string api_key,
                               std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), station_ids_(std::move(station_ids)), api_key_(std::move(api_key)),
      timeout_(timeout) {
    while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

RawBatch LiveOwmAdapter::send(const RepositoryQuery& query) const {
    query.validate();
    json records = json::array();
    for (auto id : station_ids_) {
        if (query.limit && records.size() >= *query.limit) break;
        std::string url = base_url_ + "/data/2.5/weather?id=" + std::to_string(id);
        if (!api_key_.empty()) url += "&appid=" + api_key_;
        auto response = http::get(url, timeout_);
        if (!response.delivered()) throw Error(ErrorCode::repository_unreachable, response.error);
        if (response.status != 200)
            throw Error(ErrorCode::repository_unreachable, "HTTP " + std::to_string(response.status) + " from " + url);
        auto doc = json::parse(response.body, nullptr, false);
        if (doc.is_discarded()) continue;
        auto where = owm_location(doc);
        if (where && query.region.contains(*where)) records.push_back(std::move(doc));
    }
    return RawBatch{records.dump(), std::string(kMediaOwmJson), now_seconds()};
}

}  // namespace vsfleet
