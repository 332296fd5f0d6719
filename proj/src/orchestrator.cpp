#include "vsfleet/orchestrator.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "vsfleet/archive.hpp"
#include "vsfleet/error.hpp"
#include "vsfleet/http.hpp"
#include "vsfleet/marshal.hpp"

namespace vsfleet {

using nlohmann::json;
using std::chrono::microseconds;

namespace {

using Clock = std::chrono::steady_clock;

microseconds since(Clock::time_point start) {
    return std::chrono::duration_cast<microseconds>(Clock::now() - start);
}

std::string new_job_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    std::ostringstream ss;
    ss << "job-" << std::hex << (rng() & 0xffffffffffffULL);
    return ss.str();
}

std::string device_name(std::size_t index) { return "device-" + std::to_string(index); }

std::string_view ack_kind_name(AckStatus::Kind k) {
    switch (k) {
        case AckStatus::Kind::ok: return "ok";
        case AckStatus::Kind::failed: return "failed";
        default: return "pending";
    }
}

AckStatus::Kind parse_ack_kind(std::string_view s) {
    if (s == "ok") return AckStatus::Kind::ok;
    if (s == "failed") return AckStatus::Kind::failed;
    return AckStatus::Kind::pending;
}

json optional_us(const std::optional<microseconds>& v) { return v ? json(v->count()) : json(nullptr); }
json optional_ms(const std::optional<microseconds>& v) {
    return v ? json(static_cast<double>(v->count()) / 1000.0) : json(nullptr);
}

std::optional<microseconds> read_us(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return microseconds(j.at(key).get<std::int64_t>());
}

bool safe_component(std::string_view s) {
    return !s.empty() && s != "." && s != ".." && s.find('/') == std::string_view::npos &&
           s.find('\\') == std::string_view::npos;
}

AckStatus ack_from_response(const http::Response& r) {
    AckStatus ack;
    ack.kind = AckStatus::Kind::failed;
    if (!r.delivered()) {
        ack.reason = r.transport == http::Transport::timeout ? "timeout" : "unreachable: " + r.error;
        return ack;
    }
    auto body = json::parse(r.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
        ack.reason = "bad-ack: HTTP " + std::to_string(r.status);
        return ack;
    }
    ack.kind = body.value("status", "") == "ok" && r.status == 200 ? AckStatus::Kind::ok : AckStatus::Kind::failed;
    ack.reason = body.value("reason", ack.kind == AckStatus::Kind::ok ? "" : "HTTP " + std::to_string(r.status));
    ack.files = body.value("files", std::size_t{0});
    ack.elapsed_ms = body.value("elapsed_ms", 0.0);
    return ack;
}

}  // namespace

std::string_view to_string(JobState s) noexcept {
    switch (s) {
        case JobState::created: return "created";
        case JobState::fetching: return "fetching";
        case JobState::selecting: return "selecting";
        case JobState::marshaling: return "marshaling";
        case JobState::deploying: return "deploying";
        case JobState::complete: return "complete";
        case JobState::failed: return "failed";
    }
    return "failed";
}

JobState parse_job_state(std::string_view s) {
    for (auto st : {JobState::created, JobState::fetching, JobState::selecting, JobState::marshaling,
                    JobState::deploying, JobState::complete, JobState::failed})
        if (to_string(st) == s) return st;
    throw Error(ErrorCode::invalid_argument, "unknown job state " + std::string(s));
}

microseconds PhaseTimings::setup() const noexcept {
    return unmarshal.value_or(microseconds{0}) + select.value_or(microseconds{0}) +
           marshal.value_or(microseconds{0}) + deploy.value_or(microseconds{0});
}

void JobRequest::validate() const {
    std::map<std::string, std::string> bad;
    if (requested_count < 1) bad["count"] = "must be >= 1";
    if (per_device_limit && *per_device_limit < 1) bad["per_device_limit"] = "must be >= 1";
    if (fetch_limit && *fetch_limit < 1) bad["fetch_limit"] = "must be >= 1";
    if (targets.empty()) bad["targets"] = "at least one target endpoint required";
    for (const auto& t : targets) {
        try {
            http::parse_url(t);
        } catch (const Error&) {
            bad["targets"] = "not an http endpoint: " + t;
        }
    }
    if (criteria.empty()) bad["criteria"] = "at least one criterion required";
    std::vector<std::string> names;
    for (const auto& c : criteria) {
        try {
            context_value(ContextVector{}, c.name);
        } catch (const Error&) {
            bad["criteria"] = "unknown criterion " + c.name;
        }
        if (std::find(names.begin(), names.end(), c.name) != names.end()) bad["criteria"] = "duplicate " + c.name;
        names.push_back(c.name);
    }
    if (source.empty()) bad["source"] = "must not be empty";
    try {
        check_measurement_type(measurement_type);
    } catch (const Error&) {
        bad["measurement_type"] = "must be temperature, humidity or pressure";
    }
    if (history_hours < 1) bad["history_hours"] = "must be >= 1";
    if (!bad.empty()) throw ValidationError(std::move(bad));
}

JobRequest job_request_from_json(const json& body) {
    if (!body.is_object()) throw ValidationError("body", "expected a JSON object");
    JobRequest r;
    std::map<std::string, std::string> bad;
    auto field = [&](const char* key, auto&& read) {
        if (!body.contains(key) || body.at(key).is_null()) return;
        try {
            read(body.at(key));
        } catch (const std::exception& e) {
            bad[key] = e.what();
        }
    };
    auto count_of = [](const json& j) {
        if (!j.is_number_integer() || j.get<std::int64_t>() < 0) throw std::invalid_argument("must be a count");
        return j.get<std::size_t>();
    };

    if (!body.contains("region")) bad["region"] = "required";
    field("region", [&](const json& j) { r.region = j.get<Region>(); });
    if (!body.contains("count")) bad["count"] = "required";
    field("count", [&](const json& j) { r.requested_count = count_of(j); });
    field("per_device_limit", [&](const json& j) { r.per_device_limit = count_of(j); });
    field("fetch_limit", [&](const json& j) { r.fetch_limit = count_of(j); });
    field("selector", [&](const json& j) {
        auto s = j.get<std::string>();
        if (s == "topsis") r.selector = SelectorKind::topsis;
        else if (s == "random") r.selector = SelectorKind::random;
        else throw std::invalid_argument("must be topsis or random");
    });
    field("criteria", [&](const json& j) {
        r.criteria.clear();
        for (const auto& c : j)
            r.criteria.push_back({c.at("name").get<std::string>(), parse_direction(c.at("direction").get<std::string>())});
    });
    field("targets", [&](const json& j) { r.targets = j.get<std::vector<std::string>>(); });
    field("seed", [&](const json& j) { r.seed = j.get<std::uint64_t>(); });
    field("source", [&](const json& j) { r.source = j.get<std::string>(); });
    field("measurement_type", [&](const json& j) { r.measurement_type = j.get<std::string>(); });
    field("history_hours", [&](const json& j) { r.history_hours = j.get<int>(); });
    field("strict_availability", [&](const json& j) { r.strict_availability = j.get<bool>(); });
    try {
        r.validate();
    } catch (const ValidationError& e) {
        for (const auto& [k, v] : e.fields()) bad.emplace(k, v);
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));
    return r;
}

json to_json(const JobRequest& r) {
    json criteria = json::array();
    for (const auto& c : r.criteria) criteria.push_back({{"name", c.name}, {"direction", to_string(c.direction)}});
    json j = {{"region", r.region},
              {"count", r.requested_count},
              {"selector", r.selector == SelectorKind::topsis ? "topsis" : "random"},
              {"criteria", criteria},
              {"targets", r.targets},
              {"seed", r.seed},
              {"source", r.source},
              {"measurement_type", r.measurement_type},
              {"history_hours", r.history_hours},
              {"strict_availability", r.strict_availability}};
    if (r.per_device_limit) j["per_device_limit"] = *r.per_device_limit;
    if (r.fetch_limit) j["fetch_limit"] = *r.fetch_limit;
    return j;
}

void to_json(json& j, const DeployManifest& m) {
    j = {{"job_id", m.job_id},
         {"device", m.device},
         {"archive_uri", m.archive_uri},
         {"archive_digest", m.archive_digest},
         {"descriptor_count", m.descriptor_count}};
}

void from_json(const json& j, DeployManifest& m) {
    j.at("job_id").get_to(m.job_id);
    j.at("device").get_to(m.device);
    j.at("archive_uri").get_to(m.archive_uri);
    j.at("archive_digest").get_to(m.archive_digest);
    j.at("descriptor_count").get_to(m.descriptor_count);
}

json job_view(const DeployJob& job) {
    const auto& t = job.timings;
    json devices = json::array();
    std::size_t deployed = 0;
    for (const auto& d : job.devices) {
        if (d.ack.kind == AckStatus::Kind::ok) deployed += d.descriptor_count;
        devices.push_back({{"endpoint", d.endpoint},
                           {"device", d.device},
                           {"descriptor_count", d.descriptor_count},
                           {"archive_uri", d.archive_uri},
                           {"archive_digest", d.archive_digest},
                           {"archive_bytes", d.archive_bytes},
                           {"ack",
                            {{"status", ack_kind_name(d.ack.kind)},
                             {"reason", d.ack.reason},
                             {"files", d.ack.files},
                             {"elapsed_ms", d.ack.elapsed_ms}}}});
    }
    return {{"id", job.id},
            {"state", to_string(job.state)},
            {"request", to_json(job.request)},
            {"timings",
             {{"fetch_ms", optional_ms(t.fetch)},
              {"unmarshal_ms", optional_ms(t.unmarshal)},
              {"select_ms", optional_ms(t.select)},
              {"marshal_ms", optional_ms(t.marshal)},
              {"deploy_ms", optional_ms(t.deploy)},
              {"setup_ms", static_cast<double>(t.setup().count()) / 1000.0}}},
            {"timings_us",
             {{"fetch", optional_us(t.fetch)},
              {"unmarshal", optional_us(t.unmarshal)},
              {"select", optional_us(t.select)},
              {"marshal", optional_us(t.marshal)},
              {"deploy", optional_us(t.deploy)},
              {"setup", t.setup().count()}}},
            {"counts",
             {{"available", job.available},
              {"skipped", job.skipped},
              {"selected", job.selected},
              {"dropped", job.dropped},
              {"deployed", deployed}}},
            {"devices", devices},
            {"failed_phase", job.failed_phase},
            {"failure", job.failure}};
}

DeployJob job_from_view(const json& v) {
    DeployJob job;
    job.id = v.at("id").get<std::string>();
    job.state = parse_job_state(v.at("state").get<std::string>());
    job.request = job_request_from_json(v.at("request"));
    const auto& us = v.at("timings_us");
    job.timings.fetch = read_us(us, "fetch");
    job.timings.unmarshal = read_us(us, "unmarshal");
    job.timings.select = read_us(us, "select");
    job.timings.marshal = read_us(us, "marshal");
    job.timings.deploy = read_us(us, "deploy");
    const auto& counts = v.at("counts");
    job.available = counts.at("available").get<std::size_t>();
    job.skipped = counts.at("skipped").get<std::size_t>();
    job.selected = counts.at("selected").get<std::size_t>();
    job.dropped = counts.at("dropped").get<std::size_t>();
    for (const auto& d : v.at("devices")) {
        DeviceDeployment dd;
        dd.endpoint = d.at("endpoint").get<std::string>();
        dd.device = d.at("device").get<std::string>();
        dd.descriptor_count = d.at("descriptor_count").get<std::size_t>();
        dd.archive_uri = d.at("archive_uri").get<std::string>();
        dd.archive_digest = d.at("archive_digest").get<std::string>();
        dd.archive_bytes = d.at("archive_bytes").get<std::size_t>();
        const auto& a = d.at("ack");
        dd.ack.kind = parse_ack_kind(a.at("status").get<std::string>());
        dd.ack.reason = a.at("reason").get<std::string>();
        dd.ack.files = a.at("files").get<std::size_t>();
        dd.ack.elapsed_ms = a.at("elapsed_ms").get<double>();
        job.devices.push_back(std::move(dd));
    }
    job.failed_phase = v.value("failed_phase", "");
    job.failure = v.value("failure", "");
    return job;
}

PartitionPlan partition_sizes(std::size_t items, std::size_t devices, std::optional<std::size_t> per_device_limit) {
    if (devices == 0) throw Error(ErrorCode::invalid_argument, "partition needs at least one device");
    PartitionPlan plan;
    plan.shares.resize(devices);
    for (std::size_t k = 0; k < devices; ++k) {
        std::size_t share = items / devices + (k < items % devices ? 1 : 0);
        if (per_device_limit && share > *per_device_limit) {
            plan.dropped += share - *per_device_limit;
            share = *per_device_limit;
        }
        plan.shares[k] = share;
    }
    return plan;
}

Orchestrator::Orchestrator(OrchestratorConfig config, AdapterRegistry adapters)
    : config_(std::move(config)), adapters_(std::move(adapters)) {
    std::filesystem::create_directories(config_.state_dir);
    load_log();
}

Orchestrator::~Orchestrator() { wait_idle(); }

void Orchestrator::load_log() {
    std::ifstream in(config_.state_dir / "jobs.jsonl");
    for (std::string line; std::getline(in, line);) {
        auto v = json::parse(line, nullptr, false);
        if (v.is_discarded()) continue;
        try {
            auto job = job_from_view(v);
            jobs_[job.id] = std::move(job);
        } catch (const std::exception&) {
            continue;
        }
    }
    for (auto& [id, job] : jobs_) {
        if (job.terminal()) continue;
        job.failed_phase = std::string(to_string(job.state));
        job.failure = "interrupted by orchestrator restart";
        job.state = JobState::failed;
        persist(job);
    }
}

void Orchestrator::persist(const DeployJob& job) {
    auto line = job_view(job).dump();
    std::lock_guard lock(log_mutex_);
    std::ofstream out(config_.state_dir / "jobs.jsonl", std::ios::app);
    out << line << '\n';
}

template <class Fn>
void Orchestrator::update(const std::string& id, Fn&& change) {
    DeployJob snapshot;
    {
        std::lock_guard lock(mutex_);
        auto& job = jobs_.at(id);
        change(job);
        snapshot = job;
    }
    persist(snapshot);
}

std::shared_ptr<const RepositoryAdapter> Orchestrator::adapter(const std::string& source) const {
    auto it = adapters_.find(source);
    if (it == adapters_.end()) throw ValidationError("source", "unknown repository source " + source);
    return it->second;
}

SensorPreview Orchestrator::preview(const RepositoryQuery& query) const {
    query.validate();
    auto repo = adapter(query.source);
    RepositoryQuery all = query;
    if (dynamic_cast<const SyntheticAdapter*>(repo.get()) == nullptr) all.limit.reset();
    auto unmarshaled = unmarshal(repo->send(all));
    SensorPreview p;
    p.available = unmarshaled.sensors.size();
    if (query.limit && unmarshaled.sensors.size() > *query.limit) unmarshaled.sensors.resize(*query.limit);
    p.sensors = std::move(unmarshaled.sensors);
    return p;
}

std::string Orchestrator::create_job(const JobRequest& request, bool start) {
    request.validate();
    adapter(request.source);
    if (request.strict_availability) {
        auto available = preview({request.region, request.fetch_limit, request.source}).available;
        if (available < request.requested_count)
            throw ValidationError("count", "requested " + std::to_string(request.requested_count) +
                                                 " exceeds available " + std::to_string(available));
    }

    DeployJob job;
    job.id = new_job_id();
    job.request = request;
    for (std::size_t k = 0; k < request.targets.size(); ++k) {
        DeviceDeployment d;
        d.endpoint = request.targets[k];
        d.device = device_name(k);
        job.devices.push_back(std::move(d));
    }
    {
        std::lock_guard lock(mutex_);
        jobs_[job.id] = job;
    }
    persist(job);

    if (start) {
        std::lock_guard lock(workers_mutex_);
        workers_.emplace_back([this, id = job.id] { run_pipeline(id); });
    }
    return job.id;
}

DeployJob Orchestrator::job_status(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(id);
    if (it == jobs_.end()) throw Error(ErrorCode::unknown_job, id);
    return it->second;
}

std::vector<DeployJob> Orchestrator::jobs() const {
    std::lock_guard lock(mutex_);
    std::vector<DeployJob> out;
    for (const auto& [id, job] : jobs_) out.push_back(job);
    return out;
}

std::filesystem::path Orchestrator::archive_path(const std::string& job_id, const std::string& device) const {
    return config_.state_dir / "artifacts" / job_id / (device + ".tar.gz");
}

std::filesystem::path Orchestrator::store_path(const std::string& job_id) const {
    return config_.state_dir / "store" / job_id;
}

void Orchestrator::set_public_base_url(std::string url) {
    std::lock_guard lock(mutex_);
    config_.public_base_url = std::move(url);
}

std::string Orchestrator::public_base_url() const {
    std::lock_guard lock(mutex_);
    return config_.public_base_url;
}

void Orchestrator::wait_idle() {
    std::vector<std::jthread> running;
    {
        std::lock_guard lock(workers_mutex_);
        running.swap(workers_);
    }
    running.clear();
}

void Orchestrator::discard_files(const std::string& job_id) {
    if (!safe_component(job_id)) return;
    std::filesystem::remove_all(store_path(job_id));
    std::filesystem::remove_all(config_.state_dir / "artifacts" / job_id);
}

DeployJob Orchestrator::run_pipeline(const std::string& id) {
    const DeployJob initial = job_status(id);
    if (initial.state != JobState::created)
        throw Error(ErrorCode::invalid_argument, "job " + id + " is not in the created state");
    const JobRequest& req = initial.request;

    auto enter = [&](JobState s) { update(id, [s](DeployJob& j) { j.state = s; }); };
    try {
        enter(JobState::fetching);
        auto repo = adapter(req.source);
        RepositoryQuery query{req.region, req.fetch_limit, req.source};
        if (!query.limit && dynamic_cast<const SyntheticAdapter*>(repo.get())) query.limit = req.requested_count;

        auto t = Clock::now();
        RawBatch batch = repo->send(query);
        const auto fetch_time = since(t);

        t = Clock::now();
        UnmarshalResult unmarshaled = unmarshal(batch);
        const auto unmarshal_time = since(t);
        batch = RawBatch{};
        update(id, [&](DeployJob& j) {
            j.timings.fetch = fetch_time;
            j.timings.unmarshal = unmarshal_time;
            j.available = unmarshaled.sensors.size();
            j.skipped = unmarshaled.skipped;
        });
        if (unmarshaled.sensors.empty()) throw Error(ErrorCode::empty_sensor_list, "no sensors available in region");

        enter(JobState::selecting);
        t = Clock::now();
        auto chosen = req.selector == SelectorKind::topsis
                          ? select_top(unmarshaled.sensors, req.criteria, req.requested_count)
                          : select_random(unmarshaled.sensors, req.requested_count, req.seed);
        const auto select_time = since(t);
        unmarshaled.sensors.clear();
        update(id, [&](DeployJob& j) {
            j.timings.select = select_time;
            j.selected = chosen.size();
        });

        enter(JobState::marshaling);
        t = Clock::now();
        auto descriptors = marshal_batch(chosen, req.measurement_type, req.history_hours, store_path(id));
        const auto marshal_time = since(t);
        chosen.clear();
        update(id, [&](DeployJob& j) { j.timings.marshal = marshal_time; });

        enter(JobState::deploying);
        deploy_phase(id, descriptors);
    } catch (const std::exception& e) {
        update(id, [&](DeployJob& j) {
            j.failed_phase = std::string(to_string(j.state));
            j.failure = e.what();
            j.state = JobState::failed;
        });
    }
    return job_status(id);
}

void Orchestrator::deploy_phase(const std::string& id, std::span<const VirtualSensorDescriptor> descriptors) {
    const DeployJob job = job_status(id);
    const auto& targets = job.request.targets;
    const std::string base_url = public_base_url();
    if (base_url.empty()) throw Error(ErrorCode::invalid_argument, "no public URL configured for archives");

    const auto start = Clock::now();
    const std::size_t devices = targets.size();
    auto plan = partition_sizes(descriptors.size(), devices, job.request.per_device_limit);

    std::vector<std::span<const VirtualSensorDescriptor>> groups(devices);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < devices; ++k) {
        groups[k] = descriptors.subspan(offset, plan.shares[k]);
        offset += descriptors.size() / devices + (k < descriptors.size() % devices ? 1 : 0);
    }

    std::vector<Archive> archives(devices);
    {
        const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, devices);
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t k = w; k < devices; k += workers)
                        if (!groups[k].empty()) archives[k] = compress(groups[k]);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        pool.clear();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }

    std::filesystem::create_directories(archive_path(id, "x").parent_path());
    std::vector<DeviceDeployment> published = job.devices;
    for (std::size_t k = 0; k < devices; ++k) {
        auto& d = published[k];
        d.descriptor_count = plan.shares[k];
        if (groups[k].empty()) {
            d.ack = AckStatus{AckStatus::Kind::ok, "nothing to deploy", 0, 0.0};
            continue;
        }
        auto path = archive_path(id, d.device);
        std::ofstream out(path, std::ios::binary);
        out.write(archives[k].bytes.data(), static_cast<std::streamsize>(archives[k].bytes.size()));
        if (!out.flush()) throw Error(ErrorCode::io_error, "cannot publish " + path.string());
        d.archive_uri = base_url + "/artifacts/" + id + "/" + d.device + ".tar.gz";
        d.archive_digest = archives[k].digest;
        d.archive_bytes = archives[k].bytes.size();
        archives[k] = Archive{};
    }
    update(id, [&](DeployJob& j) {
        j.devices = published;
        j.dropped = plan.dropped;
    });

    {
        std::vector<std::jthread> notifiers;
        for (std::size_t k = 0; k < devices; ++k) {
            if (published[k].descriptor_count == 0) continue;
            notifiers.emplace_back([&, k] {
                const auto& d = published[k];
                DeployManifest manifest{id, d.device, d.archive_uri, d.archive_digest, d.descriptor_count};
                std::string endpoint = d.endpoint;
                while (!endpoint.empty() && endpoint.back() == '/') endpoint.pop_back();
                AckStatus ack;
                try {
                    ack = ack_from_response(
                        http::post_json(endpoint + "/deploy", json(manifest).dump(), config_.ack_timeout));
                } catch (const std::exception& e) {
                    ack = AckStatus{AckStatus::Kind::failed, std::string("unreachable: ") + e.what(), 0, 0.0};
                }
                update(id, [&](DeployJob& j) { j.devices[k].ack = ack; });
            });
        }
    }
    const auto deploy_time = since(start);

    update(id, [&](DeployJob& j) {
        j.timings.deploy = deploy_time;
        std::size_t failed = 0;
        for (const auto& d : j.devices)
            if (d.ack.kind != AckStatus::Kind::ok) ++failed;
        if (failed == 0) {
            j.state = JobState::complete;
        } else {
            j.state = JobState::failed;
            j.failed_phase = "deploying";
            j.failure = std::to_string(failed) + " of " + std::to_string(j.devices.size()) + " devices failed";
        }
    });
}

}  // namespace vsfleet
