#pragma once

// Deployment orchestration: fetch -> unmarshal -> select -> marshal ->
// partition/compress/publish -> notify devices -> collect acks.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vsfleet/marshal.hpp"
#include "vsfleet/repository.hpp"
#include "vsfleet/topsis.hpp"

namespace vsfleet {

enum class JobState { created, fetching, selecting, marshaling, deploying, complete, failed };
std::string_view to_string(JobState s) noexcept;
JobState parse_job_state(std::string_view s);

enum class SelectorKind { topsis, random };

/// Phase durations. Fetch is kept for diagnostics and is not part of setup().
struct PhaseTimings {
    std::optional<std::chrono::microseconds> unmarshal;
    std::optional<std::chrono::microseconds> select;
    std::optional<std::chrono::microseconds> marshal;
    std::optional<std::chrono::microseconds> deploy;
    std::optional<std::chrono::microseconds> fetch;

    std::chrono::microseconds setup() const noexcept;
};

struct AckStatus {
    enum class Kind { pending, ok, failed };
    Kind kind = Kind::pending;
    std::string reason;
    std::size_t files = 0;
    double elapsed_ms = 0.0;
};

struct JobRequest {
    Region region;
    std::size_t requested_count = 0;
    std::optional<std::size_t> per_device_limit;
    SelectorKind selector = SelectorKind::topsis;
    std::vector<CriterionSpec> criteria = default_context_criteria();
    std::vector<std::string> targets;
    std::uint64_t seed = 0;
    std::string source = "synthetic";
    /// Repository query limit; the synthetic source defaults it to requested_count.
    std::optional<std::size_t> fetch_limit;
    std::string measurement_type = "temperature";
    int history_hours = 168;
    /// Reject at creation when fewer sensors than requested are available.
    bool strict_availability = false;

    /// Throws ValidationError listing every bad field.
    void validate() const;
};

/// Parses a POST /jobs body. Throws ValidationError.
JobRequest job_request_from_json(const nlohmann::json& body);
nlohmann::json to_json(const JobRequest& request);

struct DeployManifest {
    std::string job_id;
    std::string device;
    std::string archive_uri;
    std::string archive_digest;
    std::size_t descriptor_count = 0;
};

void to_json(nlohmann::json& j, const DeployManifest& m);
void from_json(const nlohmann::json& j, DeployManifest& m);

struct DeviceDeployment {
    std::string endpoint;
    std::string device;
    std::size_t descriptor_count = 0;
    std::string archive_uri;
    std::string archive_digest;
    std::size_t archive_bytes = 0;
    AckStatus ack;
};

struct DeployJob {
    std::string id;
    JobRequest request;
    JobState state = JobState::created;
    PhaseTimings timings;
    std::size_t available = 0;
    std::size_t skipped = 0;
    std::size_t selected = 0;
    std::size_t dropped = 0;
    std::vector<DeviceDeployment> devices;
    std::string failed_phase;
    std::string failure;

    bool terminal() const noexcept { return state == JobState::complete || state == JobState::failed; }
};

nlohmann::json job_view(const DeployJob& job);
DeployJob job_from_view(const nlohmann::json& view);

struct PartitionPlan {
    std::vector<std::size_t> shares;  // per device, in device order
    std::size_t dropped = 0;
};

/// Contiguous even split: earlier devices take ceil(n/d), later ones floor(n/d);
/// each share is then capped at `per_device_limit`, the excess being dropped.
PartitionPlan partition_sizes(std::size_t items, std::size_t devices,
                              std::optional<std::size_t> per_device_limit = std::nullopt);

template <class T>
std::vector<std::vector<T>> partition(std::span<const T> items, std::size_t devices,
                                      std::optional<std::size_t> per_device_limit = std::nullopt,
                                      std::size_t* dropped = nullptr) {
    auto plan = partition_sizes(items.size(), devices, per_device_limit);
    std::vector<std::vector<T>> out(devices);
    std::size_t base = 0;
    const std::size_t uncapped_floor = items.size() / devices;
    const std::size_t extra = items.size() % devices;
    for (std::size_t k = 0; k < devices; ++k) {
        out[k].assign(items.begin() + base, items.begin() + base + plan.shares[k]);
        base += uncapped_floor + (k < extra ? 1 : 0);
    }
    if (dropped) *dropped = plan.dropped;
    return out;
}

struct OrchestratorConfig {
    /// Holds store/<job>/ descriptors, artifacts/<job>/ archives and jobs.jsonl.
    std::filesystem::path state_dir;
    /// Base of archive URIs handed to devices, e.g. "http://127.0.0.1:8080".
    std::string public_base_url;
    std::chrono::milliseconds ack_timeout = std::chrono::seconds(60);
};

struct SensorPreview {
    std::size_t available = 0;
    std::vector<GenericSensor> sensors;
};

class Orchestrator {
public:
    Orchestrator(OrchestratorConfig config, AdapterRegistry adapters);
    ~Orchestrator();

    Orchestrator(const Orchestrator&) = delete;
    Orchestrator& operator=(const Orchestrator&) = delete;

    /// Validates and persists a job in the created state. With `start` the
    /// pipeline runs on a background thread.
    std::string create_job(const JobRequest& request, bool start = true);

    /// Runs a created job to a terminal state on the calling thread.
    DeployJob run_pipeline(const std::string& id);

    /// Throws Error(unknown_job).
    DeployJob job_status(const std::string& id) const;
    std::vector<DeployJob> jobs() const;

    /// Sensors available in `query.region` from `query.source`; at most
    /// `query.limit` are returned, all are counted.
    SensorPreview preview(const RepositoryQuery& query) const;

    std::filesystem::path archive_path(const std::string& job_id, const std::string& device) const;
    std::filesystem::path store_path(const std::string& job_id) const;

    void set_public_base_url(std::string url);
    std::string public_base_url() const;

    /// Blocks until every background pipeline has finished.
    void wait_idle();

    /// Removes a terminal job's descriptor store and archives.
    void discard_files(const std::string& job_id);

private:
    template <class Fn>
    void update(const std::string& id, Fn&& change);
    void persist(const DeployJob& job);
    void load_log();
    void deploy_phase(const std::string& id, std::span<const VirtualSensorDescriptor> descriptors);
    std::shared_ptr<const RepositoryAdapter> adapter(const std::string& source) const;

    OrchestratorConfig config_;
    AdapterRegistry adapters_;
    mutable std::mutex mutex_;
    std::map<std::string, DeployJob> jobs_;
    std::mutex log_mutex_;
    std::mutex workers_mutex_;
    std::vector<std::jthread> workers_;
};

/// REST front end:
///   POST /jobs, GET /jobs, GET /jobs/{id}, GET /regions/sensors,
///   GET /artifacts/{job}/{device}.tar.gz
class OrchestratorServer {
public:
    explicit OrchestratorServer(Orchestrator& orchestrator);
    ~OrchestratorServer();

    OrchestratorServer(const OrchestratorServer&) = delete;
    OrchestratorServer& operator=(const OrchestratorServer&) = delete;

    /// Binds (port 0 picks a free one), starts serving on a background thread
    /// and points the orchestrator's archive URIs at this server. Throws
    /// Error(port_in_use).
    std::uint16_t start(const std::string& host = "127.0.0.1", std::uint16_t port = 0);
    void stop();
    std::string base_url() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace vsfleet
