#include "vsfleet/agent.hpp"

#include <cstdio>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "vsfleet/archive.hpp"
#include "vsfleet/error.hpp"
#include "vsfleet/http.hpp"
#include "vsfleet/xml.hpp"

namespace vsfleet {

using nlohmann::json;
namespace fs = std::filesystem;

void to_json(json& j, const Ack& a) {
    j = {{"status", a.ok ? "ok" : "failed"}, {"files", a.files}, {"elapsed_ms", a.elapsed_ms}};
    if (!a.ok) j["reason"] = a.reason;
}

void from_json(const json& j, Ack& a) {
    a.ok = j.at("status").get<std::string>() == "ok";
    a.reason = j.value("reason", "");
    a.files = j.value("files", std::size_t{0});
    a.elapsed_ms = j.value("elapsed_ms", 0.0);
}

namespace {

bool plain_name(std::string_view s) {
    return !s.empty() && s.front() != '.' && s.find('/') == std::string_view::npos &&
           s.find('\\') == std::string_view::npos && s.find('\0') == std::string_view::npos;
}

struct Failure {
    std::string reason;
};

void write_file(const fs::path& path, std::string_view content) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Failure{"extraction-failed: cannot create " + path.filename().string()};
    const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
    if (std::fclose(f) != 0 || !ok) throw Failure{"extraction-failed: cannot write " + path.filename().string()};
}

std::string staging_suffix() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    std::ostringstream ss;
    ss << std::hex << rng();
    return ss.str();
}

}  // namespace

DeviceAgent::DeviceAgent(fs::path deploy_dir, std::chrono::milliseconds download_timeout)
    : deploy_dir_(std::move(deploy_dir)), download_timeout_(download_timeout) {
    fs::create_directories(deploy_dir_);
}

AgentState DeviceAgent::state() const {
    std::lock_guard lock(mutex_);
    return AgentState{deployed_, deploy_dir_, busy_};
}

Ack DeviceAgent::receive_manifest(const DeployManifest& manifest) {
    std::unique_lock lock(mutex_);
    const std::uint64_t ticket = next_ticket_++;
    turn_.wait(lock, [&] { return serving_ == ticket; });
    busy_ = true;
    lock.unlock();

    Ack ack = install(manifest);

    lock.lock();
    if (ack.ok)
        deployed_[manifest.job_id] = ack.files;
    else
        deployed_.erase(manifest.job_id);
    busy_ = false;
    ++serving_;
    lock.unlock();
    turn_.notify_all();
    return ack;
}

Ack DeviceAgent::install(const DeployManifest& m) {
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    };

    if (!plain_name(m.job_id)) return Ack{false, "manifest-invalid: bad job id", 0, elapsed()};
    const fs::path final_dir = deploy_dir_ / m.job_id;
    const fs::path staging = deploy_dir_ / (".staging-" + m.job_id + "-" + staging_suffix());

    try {
        if (m.descriptor_count < 1) throw Failure{"manifest-invalid: descriptor_count must be >= 1"};

        http::Response download;
        try {
            download = http::get(m.archive_uri, download_timeout_);
        } catch (const Error& e) {
            throw Failure{std::string("download-failed: ") + e.what()};
        }
        if (!download.delivered()) throw Failure{"download-failed: " + download.error};
        if (download.status != 200) throw Failure{"download-failed: HTTP " + std::to_string(download.status)};

        if (sha256_hex(download.body) != m.archive_digest) throw Failure{"digest-mismatch"};

        std::vector<ArchiveEntry> entries;
        try {
            entries = extract(download.body);
        } catch (const Error& e) {
            throw Failure{std::string("extraction-failed: ") + e.what()};
        }
        download.body.clear();
        for (const auto& e : entries)
            if (!plain_name(e.name)) throw Failure{"extraction-failed: unsafe entry name " + e.name};
        if (entries.size() != m.descriptor_count)
            throw Failure{"count-mismatch: expected " + std::to_string(m.descriptor_count) + ", got " +
                          std::to_string(entries.size())};
        for (const auto& e : entries)
            if (!xml::well_formed(e.content)) throw Failure{"xml-invalid: " + e.name};

        std::error_code ec;
        fs::create_directories(staging, ec);
        if (ec) throw Failure{"extraction-failed: " + ec.message()};
        for (const auto& e : entries) write_file(staging / e.name, e.content);

        std::size_t on_disk = 0;
        for ([[maybe_unused]] const auto& f : fs::directory_iterator(staging)) ++on_disk;
        if (on_disk != m.descriptor_count)
            throw Failure{"count-mismatch: expected " + std::to_string(m.descriptor_count) + " files, wrote " +
                          std::to_string(on_disk)};

        fs::remove_all(final_dir, ec);
        fs::rename(staging, final_dir, ec);
        if (ec) throw Failure{"extraction-failed: " + ec.message()};
        return Ack{true, {}, on_disk, elapsed()};
    } catch (const Failure& f) {
        std::error_code ec;
        fs::remove_all(staging, ec);
        fs::remove_all(final_dir, ec);
        return Ack{false, f.reason, 0, elapsed()};
    }
}

struct AgentServer::Impl {
    explicit Impl(fs::path dir) : agent(std::move(dir)) {
        // httplib defaults to SO_REUSEPORT, which lets a second listener share
        // an occupied port; plain SO_REUSEADDR makes the conflict visible.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
    }

    DeviceAgent agent;
    httplib::Server server;
    std::thread thread;
    std::string host;
    std::uint16_t port = 0;
};

AgentServer::AgentServer(fs::path deploy_dir) : impl_(std::make_unique<Impl>(std::move(deploy_dir))) {
    auto& agent = impl_->agent;
    impl_->server.Post("/deploy", [&agent](const httplib::Request& req, httplib::Response& res) {
        DeployManifest manifest;
        try {
            manifest = json::parse(req.body).get<DeployManifest>();
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(json(Ack{false, std::string("manifest-invalid: ") + e.what(), 0, 0.0}).dump(),
                            "application/json");
            return;
        }
        const Ack ack = agent.receive_manifest(manifest);
        res.status = 200;
        res.set_content(json(ack).dump(), "application/json");
    });
    impl_->server.Get("/health", [&agent](const httplib::Request&, httplib::Response& res) {
        auto s = agent.state();
        json body = {{"status", "up"},
                     {"busy", s.busy},
                     {"deploy_dir", s.deploy_dir.string()},
                     {"deployed_jobs", s.deployed_jobs}};
        res.set_content(body.dump(), "application/json");
    });
}

AgentServer::~AgentServer() { stop(); }

std::uint16_t AgentServer::start(const std::string& host, std::uint16_t port) {
    auto& srv = impl_->server;
    int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw Error(ErrorCode::port_in_use, host + ":" + std::to_string(port));
    impl_->host = host;
    impl_->port = static_cast<std::uint16_t>(bound);
    impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    return impl_->port;
}

void AgentServer::stop() {
    if (!impl_ || !impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

std::string AgentServer::endpoint() const { return "http://" + impl_->host + ":" + std::to_string(impl_->port); }

DeviceAgent& AgentServer::agent() noexcept { return impl_->agent; }

Fleet::~Fleet() { stop(); }

std::vector<std::string> Fleet::endpoints() const {
    std::vector<std::string> out;
    for (const auto& a : agents_) out.push_back(a->endpoint());
    return out;
}

void Fleet::stop() {
    for (auto& a : agents_)
        if (a) a->stop();
}

Fleet spawn_fleet(std::size_t count, std::uint16_t base_port, const fs::path& root) {
    if (count < 1) throw Error(ErrorCode::invalid_argument, "fleet needs at least one agent");
    Fleet fleet;
    for (std::size_t k = 0; k < count; ++k) {
        auto agent = std::make_unique<AgentServer>(root / ("agent-" + std::to_string(k)));
        const auto port = base_port == 0 ? std::uint16_t{0} : static_cast<std::uint16_t>(base_port + k);
        agent->start("127.0.0.1", port);
        fleet.agents_.push_back(std::move(agent));
    }
    return fleet;
}

}  // namespace vsfleet
