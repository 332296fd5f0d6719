// vsfleet: command-line front end for the orchestrator, device agent,
// selector, case-study report and benchmark sweep.

#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "vsfleet/agent.hpp"
#include "vsfleet/analysis.hpp"
#include "vsfleet/bench.hpp"
#include "vsfleet/error.hpp"
#include "vsfleet/fixtures.hpp"
#include "vsfleet/http.hpp"
#include "vsfleet/orchestrator.hpp"
#include "vsfleet/topsis.hpp"

#ifndef VSFLEET_DATA_DIR
#define VSFLEET_DATA_DIR "data"
#endif

using namespace vsfleet;
using nlohmann::json;

namespace {

// Blocks SIGINT/SIGTERM for every thread started afterwards, so that
// wait_for_shutdown() is the only place they are delivered.
sigset_t block_shutdown_signals() {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    return set;
}

void wait_for_shutdown(const sigset_t& set) {
    int sig = 0;
    sigwait(&set, &sig);
}

// "europe", "north-america", or "lon1,lat1,lon2,lat2" (north-west then
// south-east corner).
Region parse_region(const std::string& text) {
    for (const auto& spec : fixture_region_specs())
        if (spec.slug == text) return spec.region;
    std::vector<double> v;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto comma = text.find(',', pos);
        const auto cell = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        std::size_t used = 0;
        try {
            v.push_back(std::stod(cell, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != cell.size()) break;
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (v.size() != 4) throw Error(ErrorCode::invalid_argument, "region must be a name or lon1,lat1,lon2,lat2: " + text);
    return Region(GeoPoint(v[1], v[0]), GeoPoint(v[3], v[2]));
}

AdapterRegistry make_adapters(const std::string& fixtures, std::uint64_t synthetic_seed, const std::string& owm_url,
                              const std::vector<std::int64_t>& owm_stations, const std::string& owm_key) {
    AdapterRegistry adapters;
    adapters.emplace("synthetic", std::make_shared<SyntheticAdapter>(synthetic_seed));
    if (std::filesystem::exists(std::filesystem::path(fixtures) / "regions.json"))
        adapters.emplace("owm-fixture", std::make_shared<FixtureAdapter>(fixtures));
    else
        std::cerr << "warning: no fixtures in " << fixtures << ", owm-fixture source disabled\n";
    if (!owm_url.empty()) adapters.emplace("owm-live", std::make_shared<LiveOwmAdapter>(owm_url, owm_stations, owm_key));
    return adapters;
}

json job_request_json(const std::string& region, std::size_t count, const std::vector<std::string>& targets,
                      const std::string& selector, std::uint64_t seed, const std::string& source,
                      std::optional<std::size_t> per_device, std::optional<std::size_t> fetch_limit) {
    const Region r = parse_region(region);
    json body = {{"region", r},        {"count", count}, {"targets", targets},
                 {"selector", selector}, {"seed", seed},   {"source", source}};
    if (per_device) body["per_device_limit"] = *per_device;
    if (fetch_limit) body["fetch_limit"] = *fetch_limit;
    return body;
}

int print_job(const json& view) {
    std::cout << view.dump(2) << '\n';
    return view.value("state", "") == "complete" ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sensor discovery, selection and deployment"};
    app.require_subcommand(1);
    const std::string data_dir = VSFLEET_DATA_DIR;

    // serve
    auto* serve = app.add_subcommand("serve", "Run the orchestrator REST API");
    std::string serve_host = "127.0.0.1";
    std::uint16_t serve_port = 8080;
    std::string state_dir = "vsfleet-state";
    std::string fixtures = data_dir + "/fixtures";
    std::uint64_t synthetic_seed = 42;
    std::string owm_url, owm_key;
    std::vector<std::int64_t> owm_stations;
    serve->add_option("--host", serve_host, "Bind address")->capture_default_str();
    serve->add_option("--port", serve_port, "Port")->capture_default_str();
    serve->add_option("--state-dir", state_dir, "Job log, descriptor store and archives")->capture_default_str();
    serve->add_option("--fixtures", fixtures, "Fixture directory for the owm-fixture source")->capture_default_str();
    serve->add_option("--synthetic-seed", synthetic_seed, "Seed of the synthetic source")->capture_default_str();
    serve->add_option("--owm-url", owm_url, "Enable the owm-live source against this base URL");
    serve->add_option("--owm-stations", owm_stations, "Station ids the owm-live source polls")->delimiter(',');
    serve->add_option("--owm-key", owm_key, "API key for owm-live");

    // agent
    auto* agent = app.add_subcommand("agent", "Run a device agent");
    std::string agent_host = "127.0.0.1";
    std::uint16_t agent_port = 9000;
    std::string agent_dir = "vsfleet-agent";
    agent->add_option("--host", agent_host, "Bind address")->capture_default_str();
    agent->add_option("--port", agent_port, "Port")->capture_default_str();
    agent->add_option("--dir", agent_dir, "Deploy directory")->capture_default_str();

    // deploy
    auto* deploy = app.add_subcommand("deploy", "Create a deployment job and wait for it");
    std::string region;
    std::size_t count = 0;
    std::vector<std::string> targets;
    std::string selector = "topsis";
    std::uint64_t seed = 0;
    std::string source = "synthetic";
    std::string server;
    std::optional<std::size_t> per_device, fetch_limit;
    deploy->add_option("--region", region, "europe, north-america or lon1,lat1,lon2,lat2")->required();
    deploy->add_option("--count", count, "Sensors to deploy")->required();
    deploy->add_option("--targets", targets, "Agent endpoints")->delimiter(',')->required();
    deploy->add_option("--selector", selector, "topsis or random")->capture_default_str();
    deploy->add_option("--seed", seed, "Seed for the random selector")->capture_default_str();
    deploy->add_option("--source", source, "Repository source")->capture_default_str();
    deploy->add_option("--per-device-limit", per_device, "Cap on descriptors per device");
    deploy->add_option("--fetch-limit", fetch_limit, "Repository query limit");
    deploy->add_option("--server", server, "Submit to a running orchestrator instead of an embedded one");
    deploy->add_option("--state-dir", state_dir, "State directory of the embedded orchestrator")->capture_default_str();
    deploy->add_option("--fixtures", fixtures, "Fixture directory")->capture_default_str();

    // topsis
    auto* topsis = app.add_subcommand("topsis", "Rank a decision matrix given as CSV");
    std::string matrix_path;
    topsis->add_option("--input", matrix_path, "CSV file; standard input when omitted");

    // report
    auto* report = app.add_subcommand("report", "Rank cities for a rheumatic disease");
    std::string disease, readings_path;
    report->add_option("--disease", disease, "osteoarthritis, arthritis or fibromyalgia")->required();
    report->add_option("--input", readings_path, "city,country,temp_k,pressure_hpa,humidity_pct CSV")->required();

    // bench
    auto* bench = app.add_subcommand("bench", "Run the factorial performance sweep");
    ExperimentDesign design;
    std::string out_dir = "results";
    std::string work_dir;
    BenchOptions bench_options;
    bench->add_option("--devices", design.device_levels, "Device levels")->delimiter(',')->capture_default_str();
    bench->add_option("--sensors", design.sensor_levels, "Sensor levels")->delimiter(',')->capture_default_str();
    bench->add_option("--reps", design.replications, "Replications per cell")->capture_default_str();
    bench->add_option("--seed", design.seed, "Design seed")->capture_default_str();
    bench->add_option("--out", out_dir, "Output directory")->capture_default_str();
    bench->add_option("--work-dir", work_dir, "Scratch directory (default: under /dev/shm when present)");
    bench->add_option("--endpoints", bench_options.remote_endpoints, "Remote agent endpoints")->delimiter(',');
    bench->add_option("--bind", bench_options.bind_host, "Orchestrator bind address")->capture_default_str();
    bench->add_option("--public-host", bench_options.public_host, "Host agents use to reach the orchestrator");

    // gen-fixtures
    auto* gen = app.add_subcommand("gen-fixtures", "Write the offline repository fixtures");
    std::string gen_out = data_dir + "/fixtures";
    gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*serve) {
            auto signals = block_shutdown_signals();
            Orchestrator orchestrator({state_dir, ""},
                                      make_adapters(fixtures, synthetic_seed, owm_url, owm_stations, owm_key));
            OrchestratorServer http(orchestrator);
            http.start(serve_host, serve_port);
            std::cerr << "orchestrator listening on " << http.base_url() << '\n';
            wait_for_shutdown(signals);
            http.stop();
            orchestrator.wait_idle();
            return 0;
        }
        if (*agent) {
            auto signals = block_shutdown_signals();
            AgentServer http(agent_dir);
            http.start(agent_host, agent_port);
            std::cerr << "agent listening on " << http.endpoint() << ", deploying into " << agent_dir << '\n';
            wait_for_shutdown(signals);
            http.stop();
            return 0;
        }
        if (*deploy) {
            const auto body = job_request_json(region, count, targets, selector, seed, source, per_device, fetch_limit);
            if (!server.empty()) {
                while (!server.empty() && server.back() == '/') server.pop_back();
                auto created = http::post_json(server + "/jobs", body.dump(), std::chrono::seconds(30));
                if (!created.delivered()) throw Error(ErrorCode::repository_unreachable, created.error);
                if (created.status != 201) {
                    std::cerr << created.body << '\n';
                    return 2;
                }
                const auto id = json::parse(created.body).at("id").get<std::string>();
                for (;;) {
                    auto status = http::get(server + "/jobs/" + id, std::chrono::seconds(30));
                    if (!status.delivered()) throw Error(ErrorCode::repository_unreachable, status.error);
                    auto view = json::parse(status.body);
                    const auto state = view.value("state", "");
                    if (state == "complete" || state == "failed") return print_job(view);
                    std::this_thread::sleep_for(std::chrono::milliseconds(200));
                }
            }
            Orchestrator orchestrator({state_dir, ""}, make_adapters(fixtures, seed, "", {}, ""));
            OrchestratorServer http(orchestrator);
            http.start("127.0.0.1", 0);
            const auto job = orchestrator.run_pipeline(orchestrator.create_job(job_request_from_json(body), false));
            http.stop();
            return print_job(job_view(job));
        }
        if (*topsis) {
            std::ifstream file;
            if (!matrix_path.empty()) {
                file.open(matrix_path);
                if (!file) throw Error(ErrorCode::io_error, "cannot open " + matrix_path);
            }
            const auto m = read_decision_csv(matrix_path.empty() ? std::cin : file);
            write_ranking_csv(std::cout, m, rank(m));
            return 0;
        }
        if (*report) {
            std::ifstream file(readings_path);
            if (!file) throw Error(ErrorCode::io_error, "cannot open " + readings_path);
            const auto readings = read_city_csv(file);
            const auto ranking = rank_cities(readings, DiseaseProfile::for_disease(parse_disease(disease)));
            write_ranking_csv(std::cout, ranking);
            return 0;
        }
        if (*bench) {
            const std::filesystem::path out(out_dir);
            std::filesystem::create_directories(out);
            bench_options.work_dir = work_dir.empty() ? default_scratch_dir() : std::filesystem::path(work_dir);
            std::size_t done = 0;
            const auto total = design.trials();
            bench_options.on_record = [&](const TrialRecord& r) {
                ++done;
                std::cerr << '[' << done << '/' << total << "] devices=" << r.devices << " sensors=" << r.sensors
                          << " rep=" << r.rep << (r.ok ? " setup_ms=" + std::to_string(r.setup().count() / 1000)
                                                       : " FAILED " + r.error)
                          << '\n';
            };
            const auto records = run_design(design, bench_options);
            {
                std::ofstream csv(out / "records.csv");
                write_records_csv(csv, records);
            }
            std::size_t failed = 0;
            for (const auto& r : records) failed += r.ok ? 0 : 1;
            if (failed) std::cerr << failed << " trials failed\n";
            if (design.replications >= 2) {
                const auto summary = summarize(records);
                std::ofstream csv(out / "summary.csv");
                write_summary_csv(csv, summary);
                for (auto msg : {check_bytes_decrease_with_devices(summary), check_device_independence(summary),
                                 check_linear_growth(summary)})
                    if (!msg.empty()) std::cerr << "shape check: " << msg << '\n';
            }
            std::filesystem::remove_all(bench_options.work_dir);
            return failed ? 1 : 0;
        }
        if (*gen) {
            write_owm_fixtures(gen_out);
            return 0;
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        for (const auto& [field, msg] : e.fields()) std::cerr << "  " << field << ": " << msg << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
