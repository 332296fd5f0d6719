#include "vsfleet/bench.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <sstream>

#include <malloc.h>
#include <unistd.h>

#include "vsfleet/agent.hpp"
#include "vsfleet/error.hpp"
#include "vsfleet/numfmt.hpp"
#include "vsfleet/orchestrator.hpp"
#include "vsfleet/random.hpp"

namespace vsfleet {

namespace {

constexpr double kZ95 = 1.96;

Region europe() { return Region(GeoPoint(80.0, -30.0), GeoPoint(40.0, 30.0)); }

double ms(std::chrono::microseconds us) { return static_cast<double>(us.count()) / 1000.0; }

void remove_quietly(const std::filesystem::path& p) {
    std::error_code ec;
    std::filesystem::remove_all(p, ec);
}

// Writeback left over from the previous trial would otherwise be charged to
// whichever phase of the next trial happens to touch the disk.
void settle() {
    ::sync();
    ::malloc_trim(0);
}

template <class Get>
std::string check_ratio(std::span<const CellSummary> summary, const char* what, Get get, double tolerance) {
    std::map<std::size_t, std::vector<const CellSummary*>> by_sensors;
    for (const auto& c : summary) by_sensors[c.sensors].push_back(&c);
    for (const auto& [sensors, cells] : by_sensors) {
        if (cells.size() < 2) continue;
        double lo = get(*cells.front()), hi = lo;
        for (const auto* c : cells) {
            lo = std::min(lo, get(*c));
            hi = std::max(hi, get(*c));
        }
        if (lo <= 0.0) continue;
        if (hi / lo - 1.0 >= tolerance) {
            std::ostringstream msg;
            msg << what << " at " << sensors << " sensors varies from " << format_decimal(lo) << " to "
                << format_decimal(hi) << " ms across device levels";
            return msg.str();
        }
    }
    return {};
}

}  // namespace

void ExperimentDesign::validate() const {
    if (device_levels.empty() || sensor_levels.empty())
        throw Error(ErrorCode::invalid_argument, "design needs at least one device and sensor level");
    if (std::find(device_levels.begin(), device_levels.end(), 0u) != device_levels.end())
        throw Error(ErrorCode::invalid_argument, "device levels must be >= 1");
    if (std::find(sensor_levels.begin(), sensor_levels.end(), 0u) != sensor_levels.end())
        throw Error(ErrorCode::invalid_argument, "sensor levels must be >= 1");
    if (replications < 1) throw Error(ErrorCode::invalid_argument, "replications must be >= 1");
}

std::filesystem::path default_scratch_dir() {
    std::error_code ec;
    const std::filesystem::path shm = "/dev/shm";
    const auto base = std::filesystem::is_directory(shm, ec) ? shm : std::filesystem::temp_directory_path();
    return base / ("vsfleet-bench-" + std::to_string(::getpid()));
}

std::uint64_t cell_seed(std::uint64_t design_seed, std::size_t sensors, std::size_t rep) noexcept {
    SeededStream s({design_seed, static_cast<std::uint64_t>(sensors), static_cast<std::uint64_t>(rep)});
    return s.next();
}

TrialRecord run_trial(std::size_t devices, std::size_t sensors, std::size_t rep, std::uint64_t seed,
                      const BenchOptions& options) {
    TrialRecord rec;
    rec.devices = devices;
    rec.sensors = sensors;
    rec.rep = rep;

    const auto dir = options.work_dir /
                     ("trial-" + std::to_string(devices) + "-" + std::to_string(sensors) + "-" + std::to_string(rep));
    remove_quietly(dir);
    settle();
    try {
        AdapterRegistry adapters;
        adapters.emplace("synthetic", std::make_shared<SyntheticAdapter>(seed, sensors));
        Orchestrator orchestrator({dir / "state", "", options.ack_timeout}, std::move(adapters));
        OrchestratorServer server(orchestrator);
        const auto port = server.start(options.bind_host, 0);
        if (!options.public_host.empty())
            orchestrator.set_public_base_url("http://" + options.public_host + ":" + std::to_string(port));

        Fleet fleet;
        JobRequest req;
        req.region = europe();
        req.requested_count = sensors;
        req.fetch_limit = sensors;
        req.source = "synthetic";
        if (options.remote_endpoints.empty()) {
            fleet = spawn_fleet(devices, 0, dir / "agents");
            req.targets = fleet.endpoints();
        } else {
            if (options.remote_endpoints.size() < devices)
                throw Error(ErrorCode::invalid_argument, "not enough remote endpoints for " + std::to_string(devices) +
                                                             " devices");
            req.targets.assign(options.remote_endpoints.begin(),
                               options.remote_endpoints.begin() + static_cast<std::ptrdiff_t>(devices));
        }

        settle();
        const auto job = orchestrator.run_pipeline(orchestrator.create_job(req, false));
        rec.unmarshal = job.timings.unmarshal.value_or(std::chrono::microseconds{0});
        rec.select = job.timings.select.value_or(std::chrono::microseconds{0});
        rec.marshal = job.timings.marshal.value_or(std::chrono::microseconds{0});
        rec.deploy = job.timings.deploy.value_or(std::chrono::microseconds{0});

        double bytes = 0.0;
        std::size_t receiving = 0;
        for (const auto& d : job.devices) {
            rec.digests.push_back(d.archive_digest);
            if (d.archive_bytes > 0) {
                bytes += static_cast<double>(d.archive_bytes);
                ++receiving;
            }
        }
        rec.bytes_per_device = receiving ? bytes / static_cast<double>(receiving) : 0.0;
        rec.ok = job.state == JobState::complete;
        if (!rec.ok) rec.error = job.failed_phase + ": " + job.failure;

        fleet.stop();
        server.stop();
    } catch (const std::exception& e) {
        rec.ok = false;
        rec.error = e.what();
    }
    remove_quietly(dir);
    return rec;
}

std::vector<TrialRecord> run_design(const ExperimentDesign& design, const BenchOptions& options) {
    design.validate();
    if (!options.remote_endpoints.empty()) {
        const auto most = *std::max_element(design.device_levels.begin(), design.device_levels.end());
        if (options.remote_endpoints.size() < most)
            throw Error(ErrorCode::invalid_argument, "design needs " + std::to_string(most) + " remote endpoints");
    }
    std::filesystem::create_directories(options.work_dir);

    std::vector<TrialRecord> records;
    records.reserve(design.trials());
    // Replication-major order spreads slow drift of the host evenly over all cells.
    for (std::size_t rep = 0; rep < design.replications; ++rep)
        for (auto devices : design.device_levels)
            for (auto sensors : design.sensor_levels) {
                records.push_back(run_trial(devices, sensors, rep, cell_seed(design.seed, sensors, rep), options));
                if (options.on_record) options.on_record(records.back());
            }
    return records;
}

Estimate estimate(std::span<const double> samples) {
    Estimate e;
    if (samples.empty()) return e;
    const auto n = static_cast<double>(samples.size());
    e.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    if (samples.size() < 2) return e;
    double ss = 0.0;
    for (double x : samples) ss += (x - e.mean) * (x - e.mean);
    e.ci95 = kZ95 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    return e;
}

std::vector<CellSummary> summarize(std::span<const TrialRecord> records) {
    std::map<std::pair<std::size_t, std::size_t>, std::vector<const TrialRecord*>> cells;
    for (const auto& r : records) {
        auto& cell = cells[{r.devices, r.sensors}];
        if (r.ok) cell.push_back(&r);
    }
    std::vector<CellSummary> out;
    for (const auto& [key, recs] : cells) {
        if (recs.size() < 2)
            throw Error(ErrorCode::insufficient_replications,
                        std::to_string(recs.size()) + " successful records for " + std::to_string(key.first) +
                            " devices x " + std::to_string(key.second) + " sensors");
        auto column = [&](auto get) {
            std::vector<double> v;
            for (const auto* r : recs) v.push_back(get(*r));
            return estimate(v);
        };
        CellSummary c;
        c.devices = key.first;
        c.sensors = key.second;
        c.n = recs.size();
        c.unmarshal_ms = column([](const TrialRecord& r) { return ms(r.unmarshal); });
        c.select_ms = column([](const TrialRecord& r) { return ms(r.select); });
        c.marshal_ms = column([](const TrialRecord& r) { return ms(r.marshal); });
        c.deploy_ms = column([](const TrialRecord& r) { return ms(r.deploy); });
        c.setup_ms = column([](const TrialRecord& r) { return ms(r.setup()); });
        c.bytes_per_device = column([](const TrialRecord& r) { return r.bytes_per_device; });
        out.push_back(c);
    }
    return out;
}

void write_records_csv(std::ostream& out, std::span<const TrialRecord> records) {
    out << "devices,sensors,rep,unmarshal_ms,select_ms,marshal_ms,deploy_ms,setup_ms,bytes_per_device\n";
    for (const auto& r : records) {
        if (!r.ok) continue;
        out << r.devices << ',' << r.sensors << ',' << r.rep << ',' << format_ms(r.unmarshal) << ','
            << format_ms(r.select) << ',' << format_ms(r.marshal) << ',' << format_ms(r.deploy) << ','
            << format_ms(r.setup()) << ',' << format_decimal(r.bytes_per_device) << '\n';
    }
}

void write_summary_csv(std::ostream& out, std::span<const CellSummary> summary) {
    out << "devices,sensors,n";
    for (const char* phase : {"unmarshal_ms", "select_ms", "marshal_ms", "deploy_ms", "setup_ms", "bytes_per_device"})
        out << ',' << phase << "_mean," << phase << "_ci95";
    out << '\n';
    for (const auto& c : summary) {
        out << c.devices << ',' << c.sensors << ',' << c.n;
        for (const auto* e : {&c.unmarshal_ms, &c.select_ms, &c.marshal_ms, &c.deploy_ms, &c.setup_ms,
                              &c.bytes_per_device})
            out << ',' << format_decimal(e->mean) << ',' << format_decimal(e->ci95);
        out << '\n';
    }
}

std::string check_bytes_decrease_with_devices(std::span<const CellSummary> summary) {
    std::map<std::size_t, std::map<std::size_t, double>> by_sensors;
    for (const auto& c : summary) by_sensors[c.sensors][c.devices] = c.bytes_per_device.mean;
    for (const auto& [sensors, levels] : by_sensors) {
        std::optional<std::pair<std::size_t, double>> prev;
        for (const auto& [devices, bytes] : levels) {
            if (prev && bytes > prev->second) {
                std::ostringstream msg;
                msg << "bytes per device at " << sensors << " sensors rises from " << format_decimal(prev->second)
                    << " (" << prev->first << " devices) to " << format_decimal(bytes) << " (" << devices
                    << " devices)";
                return msg.str();
            }
            prev = {devices, bytes};
        }
    }
    return {};
}

std::string check_device_independence(std::span<const CellSummary> summary, double tolerance) {
    if (auto m = check_ratio(summary, "unmarshal", [](const CellSummary& c) { return c.unmarshal_ms.mean; },
                             tolerance);
        !m.empty())
        return m;
    if (auto m = check_ratio(summary, "select", [](const CellSummary& c) { return c.select_ms.mean; }, tolerance);
        !m.empty())
        return m;
    return check_ratio(summary, "marshal", [](const CellSummary& c) { return c.marshal_ms.mean; }, tolerance);
}

std::string check_linear_growth(std::span<const CellSummary> summary, double slack) {
    std::map<std::size_t, std::map<std::size_t, const CellSummary*>> by_devices;
    for (const auto& c : summary) by_devices[c.devices][c.sensors] = &c;
    const std::pair<const char*, Estimate CellSummary::*> phases[] = {
        {"unmarshal", &CellSummary::unmarshal_ms},
        {"select", &CellSummary::select_ms},
        {"marshal", &CellSummary::marshal_ms},
        {"deploy", &CellSummary::deploy_ms},
    };
    for (const auto& [devices, levels] : by_devices) {
        const CellSummary* prev = nullptr;
        for (const auto& [sensors, cell] : levels) {
            if (prev) {
                const double size_ratio = static_cast<double>(sensors) / static_cast<double>(prev->sensors);
                for (const auto& [name, member] : phases) {
                    const double before = (prev->*member).mean, after = (cell->*member).mean;
                    if (before > 0.0 && after / before > slack * size_ratio) {
                        std::ostringstream msg;
                        msg << name << " with " << devices << " devices grows " << format_decimal(after / before)
                            << "x from " << prev->sensors << " to " << sensors << " sensors";
                        return msg.str();
                    }
                }
            }
            prev = cell;
        }
    }
    return {};
}

}  // namespace vsfleet
