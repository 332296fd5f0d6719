#pragma once

// Target-device agent: downloads a manifest's archive, verifies it, installs
// the descriptors under deploy_dir/<job_id>/ and acknowledges.

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "vsfleet/orchestrator.hpp"

namespace vsfleet {

struct Ack {
    bool ok = false;
    std::string reason;  // failure kind first: digest-mismatch, download-failed, ...
    std::size_t files = 0;
    double elapsed_ms = 0.0;
};

void to_json(nlohmann::json& j, const Ack& a);
void from_json(const nlohmann::json& j, Ack& a);

struct AgentState {
    std::map<std::string, std::size_t> deployed_jobs;
    std::filesystem::path deploy_dir;
    bool busy = false;
};

class DeviceAgent {
public:
    explicit DeviceAgent(std::filesystem::path deploy_dir,
                         std::chrono::milliseconds download_timeout = std::chrono::seconds(60));

    /// Deployments run one at a time, in arrival order. A failed ack leaves no
    /// deploy_dir/<job_id>/ behind.
    Ack receive_manifest(const DeployManifest& manifest);

    AgentState state() const;

private:
    Ack install(const DeployManifest& manifest);

    std::filesystem::path deploy_dir_;
    std::chrono::milliseconds download_timeout_;

    mutable std::mutex mutex_;
    std::condition_variable turn_;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t serving_ = 0;
    bool busy_ = false;
    std::map<std::string, std::size_t> deployed_;
};

/// HTTP front end: POST /deploy (manifest in, ack out), GET /health.
class AgentServer {
public:
    explicit AgentServer(std::filesystem::path deploy_dir);
    ~AgentServer();

    AgentServer(const AgentServer&) = delete;
    AgentServer& operator=(const AgentServer&) = delete;

    /// Port 0 picks a free port. Throws Error(port_in_use).
    std::uint16_t start(const std::string& host = "127.0.0.1", std::uint16_t port = 0);
    void stop();

    std::string endpoint() const;
    DeviceAgent& agent() noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// A set of independent agents, each with its own deploy directory
/// `<root>/agent-<k>`.
class Fleet {
public:
    Fleet() = default;
    Fleet(Fleet&&) noexcept = default;
    Fleet& operator=(Fleet&&) noexcept = default;
    ~Fleet();

    std::vector<std::string> endpoints() const;
    std::size_t size() const noexcept { return agents_.size(); }
    AgentServer& at(std::size_t k) { return *agents_.at(k); }
    void stop();

private:
    friend Fleet spawn_fleet(std::size_t, std::uint16_t, const std::filesystem::path&);
    std::vector<std::unique_ptr<AgentServer>> agents_;
};

/// Starts `count` agents on base_port, base_port+1, ... (or free ports when
/// base_port is 0). Throws Error(port_in_use) and stops any already started.
Fleet spawn_fleet(std::size_t count, std::uint16_t base_port, const std::filesystem::path& root);

}  // namespace vsfleet
