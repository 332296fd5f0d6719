#include <doctest.h>

#include <algorithm>
#include <thread>

#include <json.hpp>

#include "mock_server.hpp"
#include "support.hpp"
#include "vsfleet/agent.hpp"
#include "vsfleet/archive.hpp"
#include "vsfleet/error.hpp"
#include "vsfleet/http.hpp"
#include "vsfleet/orchestrator.hpp"

using namespace vsfleet;
using namespace vsfleet::testing;
using nlohmann::json;
using std::chrono::milliseconds;

namespace {

const Region kEurope(GeoPoint(80, -30), GeoPoint(40, 30));

class FailingAdapter : public RepositoryAdapter {
public:
    RawBatch send(const RepositoryQuery&) const override {
        throw Error(ErrorCode::repository_unreachable, "stand-in outage");
    }
};

AdapterRegistry adapters(std::uint64_t seed = 42) {
    AdapterRegistry a;
    a.emplace("synthetic", std::make_shared<SyntheticAdapter>(seed));
    a.emplace("owm-fixture", std::make_shared<FixtureAdapter>(data_path("fixtures")));
    a.emplace("broken", std::make_shared<FailingAdapter>());
    return a;
}

JobRequest request(std::size_t count, std::vector<std::string> targets) {
    JobRequest r;
    r.region = kEurope;
    r.requested_count = count;
    r.targets = std::move(targets);
    return r;
}

/// Orchestrator plus HTTP front end in a scratch directory.
struct Harness {
    explicit Harness(AdapterRegistry a = adapters(), milliseconds ack_timeout = std::chrono::seconds(60))
        : dir("orch"), orch({dir / "state", "", ack_timeout}, std::move(a)), server(orch) {
        server.start();
    }
    TempDir dir;
    Orchestrator orch;
    OrchestratorServer server;

    DeployJob run(const JobRequest& r) { return orch.run_pipeline(orch.create_job(r, false)); }
};

std::vector<std::size_t> shares(const DeployJob& job) {
    std::vector<std::size_t> out;
    for (const auto& d : job.devices) out.push_back(d.descriptor_count);
    return out;
}

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::io_error;
}

}  // namespace

TEST_CASE("partition sizes") {
    CHECK(partition_sizes(10, 3).shares == std::vector<std::size_t>{4, 3, 3});
    CHECK(partition_sizes(7, 1).shares == std::vector<std::size_t>{7});
    CHECK(partition_sizes(100, 4).shares == std::vector<std::size_t>(4, 25));
    CHECK(partition_sizes(100000, 16).shares == std::vector<std::size_t>(16, 6250));
    CHECK(partition_sizes(2, 4).shares == std::vector<std::size_t>{1, 1, 0, 0});

    auto capped = partition_sizes(10, 3, 3);
    CHECK(capped.shares == std::vector<std::size_t>{3, 3, 3});
    CHECK(capped.dropped == 1);
}

TEST_CASE("partition keeps order and drops the capped tail of each share") {
    std::vector<int> items(10);
    for (int i = 0; i < 10; ++i) items[i] = i;
    std::size_t dropped = 0;
    auto parts = partition<int>(items, 3, 3, &dropped);
    CHECK(parts[0] == std::vector<int>{0, 1, 2});
    CHECK(parts[1] == std::vector<int>{4, 5, 6});
    CHECK(parts[2] == std::vector<int>{7, 8, 9});
    CHECK(dropped == 1);
    auto even = partition<int>(items, 3);
    CHECK(even[0] == std::vector<int>{0, 1, 2, 3});
    CHECK(even[2] == std::vector<int>{7, 8, 9});
}

TEST_CASE("job request validation") {
    auto r = request(0, {});
    try {
        r.validate();
        FAIL("expected validation error");
    } catch (const ValidationError& e) {
        CHECK(e.code() == ErrorCode::validation_failed);
        CHECK(e.fields().count("count") == 1);
        CHECK(e.fields().count("targets") == 1);
    }
    r = request(5, {"http://127.0.0.1:1"});
    CHECK_NOTHROW(r.validate());
    r.measurement_type = "wind";
    CHECK_THROWS_AS(r.validate(), ValidationError);
    r = request(5, {"ftp://x"});
    CHECK_THROWS_AS(r.validate(), ValidationError);
    r = request(5, {"http://127.0.0.1:1"});
    r.criteria = {{"colour", Direction::maximize}};
    CHECK_THROWS_AS(r.validate(), ValidationError);
}

TEST_CASE("job request JSON") {
    auto body = json::parse(R"({
        "region": {"initial": {"latitude": 80, "longitude": -30}, "final": {"latitude": 40, "longitude": 30}},
        "count": 130, "targets": ["http://127.0.0.1:9000"], "selector": "random", "seed": 7,
        "criteria": [{"name": "price", "direction": "min"}], "per_device_limit": 50, "source": "owm-fixture"})");
    auto r = job_request_from_json(body);
    CHECK(r.region == kEurope);
    CHECK(r.requested_count == 130);
    CHECK(r.selector == SelectorKind::random);
    CHECK(r.seed == 7);
    CHECK(r.per_device_limit == 50u);
    CHECK(r.criteria.size() == 1);
    CHECK(job_request_from_json(to_json(r)).requested_count == 130);

    try {
        job_request_from_json(json::parse(R"({"count": "many", "selector": "best"})"));
        FAIL("expected validation error");
    } catch (const ValidationError& e) {
        CHECK(e.fields().count("count") == 1);
        CHECK(e.fields().count("selector") == 1);
        CHECK(e.fields().count("region") == 1);
    }
}

TEST_CASE("created job has no timings") {
    Harness h;
    auto id = h.orch.create_job(request(130, {"http://127.0.0.1:1"}), false);
    auto job = h.orch.job_status(id);
    CHECK(job.state == JobState::created);
    CHECK_FALSE(job.timings.unmarshal.has_value());
    CHECK_FALSE(job.timings.deploy.has_value());
    CHECK(job.timings.setup().count() == 0);
    CHECK(code_of([&] { h.orch.job_status("job-nope"); }) == ErrorCode::unknown_job);
    CHECK_THROWS_AS(h.orch.create_job(request(0, {"http://127.0.0.1:1"})), ValidationError);
}

TEST_CASE("1000 sensors to one device") {
    Harness h;
    auto fleet = spawn_fleet(1, 0, h.dir / "agents");
    auto job = h.run(request(1000, fleet.endpoints()));
    REQUIRE(job.state == JobState::complete);
    CHECK(job.available == 1000);
    CHECK(job.selected == 1000);
    CHECK(shares(job) == std::vector<std::size_t>{1000});
    CHECK(job.devices[0].ack.kind == AckStatus::Kind::ok);
    CHECK(job.devices[0].ack.files == 1000);
    CHECK(count_files(h.dir / "agents" / "agent-0" / job.id) == 1000);
    CHECK(count_files(h.orch.store_path(job.id)) == 1000);

    const auto& t = job.timings;
    REQUIRE((t.unmarshal && t.select && t.marshal && t.deploy && t.fetch));
    CHECK(t.setup() == *t.unmarshal + *t.select + *t.marshal + *t.deploy);

    auto archive = http::get(job.devices[0].archive_uri, std::chrono::seconds(10));
    REQUIRE(archive.status == 200);
    CHECK(sha256_hex(archive.body) == job.devices[0].archive_digest);
    CHECK(extract(archive.body).size() == 1000);

    auto view = job_view(job);
    CHECK(view["counts"]["deployed"] == 1000);
    CHECK(view["timings_us"]["setup"] ==
          view["timings_us"]["unmarshal"].get<std::int64_t>() + view["timings_us"]["select"].get<std::int64_t>() +
              view["timings_us"]["marshal"].get<std::int64_t>() + view["timings_us"]["deploy"].get<std::int64_t>());
    CHECK(job_from_view(view).timings.setup() == t.setup());
}

TEST_CASE("even split across devices") {
    Harness h;
    auto fleet = spawn_fleet(4, 0, h.dir / "agents");
    auto job = h.run(request(100, fleet.endpoints()));
    REQUIRE(job.state == JobState::complete);
    CHECK(shares(job) == std::vector<std::size_t>(4, 25));
    for (std::size_t k = 0; k < 4; ++k) {
        auto files = extract(read_file(h.orch.archive_path(job.id, job.devices[k].device)));
        CHECK(files.size() == 25);
        CHECK(count_files(h.dir / "agents" / ("agent-" + std::to_string(k)) / job.id) == 25);
    }

    auto endpoints = fleet.endpoints();
    endpoints.resize(3);
    auto uneven = h.run(request(10, endpoints));
    REQUIRE(uneven.state == JobState::complete);
    CHECK(shares(uneven) == std::vector<std::size_t>{4, 3, 3});
}

TEST_CASE("conservation with a per-device cap") {
    Harness h;
    auto fleet = spawn_fleet(3, 0, h.dir / "agents");
    auto r = request(10, fleet.endpoints());
    r.per_device_limit = 3;
    auto job = h.run(r);
    REQUIRE(job.state == JobState::complete);
    CHECK(job.dropped == 1);
    std::size_t total = 0;
    for (auto s : shares(job)) total += s;
    CHECK(total == std::min(r.requested_count, job.available) - job.dropped);
}

TEST_CASE("more devices than sensors") {
    Harness h;
    auto fleet = spawn_fleet(4, 0, h.dir / "agents");
    auto job = h.run(request(2, fleet.endpoints()));
    CHECK(job.state == JobState::complete);
    CHECK(shares(job) == std::vector<std::size_t>{1, 1, 0, 0});
    CHECK(job.devices[3].ack.kind == AckStatus::Kind::ok);
}

TEST_CASE("a dead device fails the job") {
    Harness h;
    auto fleet = spawn_fleet(3, 0, h.dir / "agents");
    auto targets = fleet.endpoints();
    targets.push_back("http://127.0.0.1:" + std::to_string(dead_port()));
    auto job = h.run(request(100, targets));
    CHECK(job.state == JobState::failed);
    CHECK(job.failed_phase == "deploying");
    for (std::size_t k = 0; k < 3; ++k) CHECK(job.devices[k].ack.kind == AckStatus::Kind::ok);
    CHECK(job.devices[3].ack.kind == AckStatus::Kind::failed);
    CAPTURE(job.devices[3].ack.reason);
    CHECK(job.devices[3].ack.reason.rfind("unreachable", 0) == 0);
    CHECK(job.timings.deploy.has_value());
    CHECK(job_view(job)["devices"][3]["ack"]["status"] == "failed");
}

TEST_CASE("a silent device times out") {
    Harness h(adapters(), milliseconds(300));
    MockServer slow;
    slow.set_delay(milliseconds(1500));
    auto job = h.run(request(10, {slow.url()}));
    CHECK(job.state == JobState::failed);
    CHECK(job.devices[0].ack.reason == "timeout");
}

TEST_CASE("an agent refusal is reported with its reason") {
    Harness h;
    MockServer liar;
    liar.put("/deploy", R"({"status":"failed","reason":"xml-invalid: x.xml","files":0,"elapsed_ms":1})",
             "application/json");
    auto job = h.run(request(5, {liar.url()}));
    CHECK(job.state == JobState::failed);
    CHECK(job.devices[0].ack.reason == "xml-invalid: x.xml");
}

TEST_CASE("phase failures name the phase") {
    Harness h;
    auto r = request(5, {"http://127.0.0.1:1"});
    r.source = "broken";
    auto job = h.run(r);
    CHECK(job.state == JobState::failed);
    CHECK(job.failed_phase == "fetching");
    CHECK(job.failure.find("repository-unreachable") != std::string::npos);

    r.source = "owm-fixture";
    r.region = Region(GeoPoint(10, 150), GeoPoint(-10, 170));
    job = h.run(r);
    CHECK(job.state == JobState::failed);
    CHECK(job.failure.find("no-fixture-for-region") != std::string::npos);

    r.source = "nowhere";
    CHECK_THROWS_AS(h.orch.create_job(r), ValidationError);
}

TEST_CASE("identical requests give identical archives") {
    auto digests = [] {
        Harness h;
        auto fleet = spawn_fleet(2, 0, h.dir / "agents");
        auto r = request(500, fleet.endpoints());
        r.selector = SelectorKind::random;
        r.seed = 99;
        auto job = h.run(r);
        REQUIRE(job.state == JobState::complete);
        return std::vector<std::string>{job.devices[0].archive_digest, job.devices[1].archive_digest};
    };
    CHECK(digests() == digests());
}

TEST_CASE("topsis selection is visible in the store") {
    Harness h;
    auto fleet = spawn_fleet(1, 0, h.dir / "agents");
    auto r = request(130, fleet.endpoints());
    r.source = "owm-fixture";
    auto job = h.run(r);
    REQUIRE(job.state == JobState::complete);
    CHECK(job.available == 5184);
    CHECK(job.selected == 130);
    CHECK(count_files(h.dir / "agents" / "agent-0" / job.id) == 130);
}

TEST_CASE("strict availability rejects oversized requests") {
    Harness h;
    auto r = request(6000, {"http://127.0.0.1:1"});
    r.source = "owm-fixture";
    r.strict_availability = true;
    try {
        h.orch.create_job(r);
        FAIL("expected validation error");
    } catch (const ValidationError& e) {
        CHECK(e.fields().count("count") == 1);
    }
    CHECK(h.orch.jobs().empty());
}

TEST_CASE("jobs survive a restart") {
    TempDir dir("restart");
    std::string done_id, pending_id;
    {
        Orchestrator orch({dir / "state", ""}, adapters());
        OrchestratorServer server(orch);
        server.start();
        auto fleet = spawn_fleet(1, 0, dir / "agents");
        done_id = orch.create_job(request(20, fleet.endpoints()), false);
        orch.run_pipeline(done_id);
        pending_id = orch.create_job(request(20, fleet.endpoints()), false);
    }
    Orchestrator again({dir / "state", ""}, adapters());
    auto done = again.job_status(done_id);
    CHECK(done.state == JobState::complete);
    CHECK(done.timings.deploy.has_value());
    CHECK(done.devices.at(0).ack.kind == AckStatus::Kind::ok);
    auto pending = again.job_status(pending_id);
    CHECK(pending.state == JobState::failed);
    CHECK(pending.failure.find("restart") != std::string::npos);
    CHECK(again.jobs().size() == 2);
}

TEST_CASE("discard_files removes a job's store and archives") {
    Harness h;
    auto fleet = spawn_fleet(1, 0, h.dir / "agents");
    auto job = h.run(request(10, fleet.endpoints()));
    REQUIRE(std::filesystem::exists(h.orch.store_path(job.id)));
    h.orch.discard_files(job.id);
    CHECK_FALSE(std::filesystem::exists(h.orch.store_path(job.id)));
    CHECK_FALSE(std::filesystem::exists(h.orch.archive_path(job.id, "device-0")));
}

TEST_CASE("REST: jobs") {
    Harness h;
    auto fleet = spawn_fleet(1, 0, h.dir / "agents");
    const auto base = h.server.base_url();
    const auto timeout = std::chrono::seconds(30);

    json body = {{"region", kEurope}, {"count", 130}, {"targets", fleet.endpoints()}, {"source", "owm-fixture"}};
    auto created = http::post_json(base + "/jobs", body.dump(), timeout);
    REQUIRE(created.status == 201);
    const auto id = json::parse(created.body)["id"].get<std::string>();

    json view;
    for (int i = 0; i < 300; ++i) {
        view = json::parse(http::get(base + "/jobs/" + id, timeout).body);
        if (view["state"] == "complete" || view["state"] == "failed") break;
        std::this_thread::sleep_for(milliseconds(50));
    }
    h.orch.wait_idle();
    CHECK(view["state"] == "complete");
    for (const char* phase : {"unmarshal_ms", "select_ms", "marshal_ms", "deploy_ms"})
        CHECK(view["timings"][phase].is_number());
    CHECK(view["devices"][0]["ack"]["status"] == "ok");
    CHECK(view["counts"]["available"] == 5184);

    auto list = json::parse(http::get(base + "/jobs", timeout).body);
    CHECK(list.size() == 1);

    auto missing = http::get(base + "/jobs/job-000", timeout);
    CHECK(missing.status == 404);
    CHECK(json::parse(missing.body)["error"] == "unknown-job");

    auto invalid = http::post_json(base + "/jobs", R"({"count": 0})", timeout);
    CHECK(invalid.status == 400);
    auto err = json::parse(invalid.body);
    CHECK(err["error"] == "validation-failed");
    CHECK(err["fields"].contains("count"));
    CHECK(err["fields"].contains("targets"));

    CHECK(http::post_json(base + "/jobs", "not json", timeout).status == 400);

    body["count"] = 6000;
    body["strict_availability"] = true;
    auto too_many = http::post_json(base + "/jobs", body.dump(), timeout);
    CHECK(too_many.status == 400);
    CHECK(json::parse(too_many.body)["fields"].contains("count"));
}

TEST_CASE("REST: region preview") {
    Harness h;
    const auto base = h.server.base_url();
    const auto timeout = std::chrono::seconds(30);

    auto all = http::get(base + "/regions/sensors?min_lon=-30&max_lon=30&min_lat=40&max_lat=80", timeout);
    REQUIRE(all.status == 200);
    auto j = json::parse(all.body);
    CHECK(j["available"] == 5184);
    CHECK(j["returned"] == 5184);

    auto few = json::parse(
        http::get(base + "/regions/sensors?min_lon=-30&max_lon=30&min_lat=40&max_lat=80&limit=5", timeout).body);
    CHECK(few["available"] == 5184);
    CHECK(few["returned"] == 5);
    CHECK(few["sensors"].size() == 5);
    CHECK(few["sensors"][0].contains("context"));

    auto synthetic = json::parse(
        http::get(base + "/regions/sensors?min_lon=0&max_lon=1&min_lat=0&max_lat=1&limit=7&source=synthetic", timeout)
            .body);
    CHECK(synthetic["returned"] == 7);

    CHECK(http::get(base + "/regions/sensors?min_lon=-30&max_lon=30&min_lat=40", timeout).status == 400);
    CHECK(http::get(base + "/regions/sensors?min_lon=30&max_lon=-30&min_lat=40&max_lat=80", timeout).status == 400);
    CHECK(http::get(base + "/regions/sensors?min_lon=a&max_lon=30&min_lat=40&max_lat=80", timeout).status == 400);
    CHECK(http::get(base + "/regions/sensors?min_lon=-30&max_lon=30&min_lat=40&max_lat=80&limit=0", timeout).status ==
          400);
    CHECK(http::get(base + "/regions/sensors?min_lon=150&max_lon=170&min_lat=-10&max_lat=10", timeout).status == 404);
}

TEST_CASE("REST: artifacts") {
    Harness h;
    const auto timeout = std::chrono::seconds(30);
    CHECK(http::get(h.server.base_url() + "/artifacts/job-x/device-0.tar.gz", timeout).status == 404);
    CHECK(http::get(h.server.base_url() + "/artifacts/../device-0.tar.gz", timeout).status >= 400);
}

TEST_CASE("server port conflicts") {
    Harness h;
    const auto port = static_cast<std::uint16_t>(std::stoi(h.server.base_url().substr(h.server.base_url().rfind(':') + 1)));
    Orchestrator other({h.dir / "other", ""}, adapters());
    OrchestratorServer second(other);
    CHECK(code_of([&] { second.start("127.0.0.1", port); }) == ErrorCode::port_in_use);
}
