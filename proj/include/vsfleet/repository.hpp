#pragma once

// Cloud repository access: fetch raw sensor metadata for a region and turn it
// into GenericSensor records.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vsfleet/sensor_model.hpp"

namespace vsfleet {

inline constexpr std::string_view kMediaOwmJson = "application/json";
inline constexpr std::string_view kMediaOwmNdjson = "application/x-ndjson";
inline constexpr std::string_view kMediaGenericSensors = "application/vnd.generic-sensor+json";

struct RepositoryQuery {
    Region region;
    std::optional<std::size_t> limit;
    std::string source;

    /// Throws ValidationError when limit is present and zero.
    void validate() const;
};

struct RawBatch {
    std::string payload;
    std::string media_type;
    std::int64_t fetched_at = 0;
};

class RepositoryAdapter {
public:
    virtual ~RepositoryAdapter() = default;
    virtual RawBatch send(const RepositoryQuery& query) const = 0;
};

struct FixtureRegion {
    std::string slug;
    Region region;
};

/// Serves `<slug>.owm.ndjson` files listed in `regions.json` of a fixture
/// directory. Records are post-filtered by the query region; fixtures whose
/// box does not touch the query are never read.
class FixtureAdapter : public RepositoryAdapter {
public:
    explicit FixtureAdapter(std::filesystem::path directory);

    RawBatch send(const RepositoryQuery& query) const override;

    const std::vector<FixtureRegion>& regions() const noexcept { return regions_; }

private:
    std::filesystem::path directory_;
    std::vector<FixtureRegion> regions_;
};

/// Generates sensors on demand; the batch size is the query limit, or
/// `default_count` without one.
class SyntheticAdapter : public RepositoryAdapter {
public:
    explicit SyntheticAdapter(std::uint64_t seed, std::size_t default_count = 1000)
        : seed_(seed), default_count_(default_count) {}

    RawBatch send(const RepositoryQuery& query) const override;

private:
    std::uint64_t seed_;
    std::size_t default_count_;
};

/// Queries an OpenWeatherMap-compatible endpoint station by station
/// (`<base>/data/2.5/weather?id=<id>`). The API has no bounding-box search, so
/// the configured stations are fetched and post-filtered.
class LiveOwmAdapter : public RepositoryAdapter {
public:
    LiveOwmAdapter(std::string base_url, std::vector<std::int64_t> station_ids, std::string api_key = {},
                   std::chrono::milliseconds timeout = std::chrono::seconds(10));

    RawBatch send(const RepositoryQuery& query) const override;

private:
    std::string base_url_;
    std::vector<std::int64_t> station_ids_;
    std::string api_key_;
    std::chrono::milliseconds timeout_;
};

using AdapterRegistry = std::map<std::string, std::shared_ptr<const RepositoryAdapter>, std::less<>>;

struct UnmarshalResult {
    std::vector<GenericSensor> sensors;
    std::size_t records = 0;
    std::size_t skipped = 0;
};

/// Accepts OpenWeatherMap documents (one object, an array, or NDJSON lines) and
/// the canonical GenericSensor array. Invalid or duplicate records are skipped
/// and counted; throws Error(unparseable_payload) only when nothing in the
/// payload parses, and Error(malformed_media_type) for unknown media types.
UnmarshalResult unmarshal(const RawBatch& batch);

/// `count` sensors uniformly placed inside `region`; identical arguments give
/// identical output.
std::vector<GenericSensor> generate_synthetic(std::size_t count, const Region& region, std::uint64_t seed);

struct FieldRange {
    std::string_view field;
    double low;
    double high;
};

/// Ranges the synthetic generator draws each ContextVector field from, in
/// context_field_names() order.
std::span<const FieldRange> synthetic_context_ranges() noexcept;

/// Deterministic context properties for a sensor that arrived without any.
ContextVector synthesize_context(std::int64_t sensor_id);

/// Query-by-id URL that refreshes one station, embedded in descriptors.
std::string owm_query_url(std::int64_t station_id);

}  // namespace vsfleet
