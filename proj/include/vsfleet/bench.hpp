#pragma once

// Factorial performance sweep over device counts and sensor counts.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace vsfleet {

struct ExperimentDesign {
    std::vector<std::size_t> device_levels = {1, 4, 16};
    std::vector<std::size_t> sensor_levels = {1000, 20000, 40000, 60000, 80000, 100000};
    std::size_t replications = 50;
    std::uint64_t seed = 42;

    void validate() const;
    std::size_t trials() const noexcept {
        return device_levels.size() * sensor_levels.size() * replications;
    }
};

struct TrialRecord {
    std::size_t devices = 0;
    std::size_t sensors = 0;
    std::size_t rep = 0;
    std::chrono::microseconds unmarshal{0};
    std::chrono::microseconds select{0};
    std::chrono::microseconds marshal{0};
    std::chrono::microseconds deploy{0};
    double bytes_per_device = 0.0;  // mean archive size over devices that received one
    bool ok = false;
    std::string error;
    std::vector<std::string> digests;  // per device, in device order

    std::chrono::microseconds setup() const noexcept { return unmarshal + select + marshal + deploy; }
};

struct BenchOptions {
    /// Scratch space for orchestrator state and agent deploy dirs; each
    /// trial's files are removed once it has been recorded.
    std::filesystem::path work_dir;
    /// Use these agents instead of spawning a local fleet. The first
    /// `devices` endpoints serve a cell, so at least max(device_levels) are needed.
    std::vector<std::string> remote_endpoints;
    /// Host the orchestrator binds to; remote agents must be able to reach it.
    std::string bind_host = "127.0.0.1";
    /// URL agents use to fetch archives; defaults to the bound address.
    std::string public_host;
    std::chrono::milliseconds ack_timeout = std::chrono::seconds(60);
    std::function<void(const TrialRecord&)> on_record;
};

/// Fresh scratch directory for trial files: under /dev/shm when it exists,
/// since small-file creation on disk-backed filesystems can swamp the phase
/// timings with storage noise, otherwise under the system temp directory.
std::filesystem::path default_scratch_dir();

/// Seed of the synthetic repository for one cell. Identical across device
/// levels so every level sees the same sensors.
std::uint64_t cell_seed(std::uint64_t design_seed, std::size_t sensors, std::size_t rep) noexcept;

/// Runs every (devices, sensors, replication) cell sequentially, each with a
/// fresh orchestrator and fleet. Failed jobs are recorded with ok == false.
std::vector<TrialRecord> run_design(const ExperimentDesign& design, const BenchOptions& options);

/// One trial; exposed for tests.
TrialRecord run_trial(std::size_t devices, std::size_t sensors, std::size_t rep, std::uint64_t seed,
                      const BenchOptions& options);

struct Estimate {
    double mean = 0.0;
    double ci95 = 0.0;  // half-width, 1.96 * s / sqrt(n)
};

Estimate estimate(std::span<const double> samples);

struct CellSummary {
    std::size_t devices = 0;
    std::size_t sensors = 0;
    std::size_t n = 0;
    Estimate unmarshal_ms, select_ms, marshal_ms, deploy_ms, setup_ms, bytes_per_device;
};

/// Per-cell statistics over successful records, ordered by (devices, sensors).
/// Throws Error(insufficient_replications) when a cell has fewer than two.
std::vector<CellSummary> summarize(std::span<const TrialRecord> records);

void write_records_csv(std::ostream& out, std::span<const TrialRecord> records);
void write_summary_csv(std::ostream& out, std::span<const CellSummary> summary);

/// Shape checks over a summary. Each returns an empty string when the
/// property holds, otherwise a description of the first violation.
std::string check_bytes_decrease_with_devices(std::span<const CellSummary> summary);
/// Unmarshal, select and marshal means across device levels differ by less
/// than `tolerance` relative to the smallest one.
std::string check_device_independence(std::span<const CellSummary> summary, double tolerance = 0.25);
/// Each phase mean grows at most `slack` times linearly in sensor count.
std::string check_linear_growth(std::span<const CellSummary> summary, double slack = 1.5);

}  // namespace vsfleet
