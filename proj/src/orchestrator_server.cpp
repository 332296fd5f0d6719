#include <fstream>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "vsfleet/error.hpp"
#include "vsfleet/orchestrator.hpp"

namespace vsfleet {

using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, const Error& e) {
    json body = {{"error", to_string(e.code())}, {"detail", e.what()}};
    int status = 400;
    if (const auto* v = dynamic_cast<const ValidationError*>(&e)) body["fields"] = v->fields();
    switch (e.code()) {
        case ErrorCode::unknown_job:
        case ErrorCode::no_fixture_for_region: status = 404; break;
        case ErrorCode::repository_unreachable: status = 502; break;
        case ErrorCode::io_error: status = 500; break;
        default: break;
    }
    reply(res, status, body);
}

double number_param(const httplib::Request& req, const char* key) {
    if (!req.has_param(key)) throw ValidationError(key, "required");
    try {
        std::size_t used = 0;
        auto text = req.get_param_value(key);
        double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw ValidationError(key, "must be a number");
    }
}

bool safe_component(const std::string& s) {
    return !s.empty() && s != "." && s != ".." && s.find('/') == std::string::npos;
}

}  // namespace

struct OrchestratorServer::Impl {
    explicit Impl(Orchestrator& o) : orchestrator(o) {
        // httplib defaults to SO_REUSEPORT, which lets a second listener share
        // an occupied port; plain SO_REUSEADDR makes the conflict visible.
        server.set_socket_options([](socket_t sock) {
            int yes = 1;
            ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
    }

    Orchestrator& orchestrator;
    httplib::Server server;
    std::thread thread;
    std::string host;
    std::uint16_t port = 0;
};

OrchestratorServer::OrchestratorServer(Orchestrator& orchestrator) : impl_(std::make_unique<Impl>(orchestrator)) {
    auto& srv = impl_->server;
    auto& orch = impl_->orchestrator;

    srv.Post("/jobs", [&orch](const httplib::Request& req, httplib::Response& res) {
        try {
            auto body = json::parse(req.body, nullptr, false);
            if (body.is_discarded()) throw ValidationError("body", "not valid JSON");
            auto id = orch.create_job(job_request_from_json(body));
            reply(res, 201, {{"id", id}});
        } catch (const Error& e) {
            reply_error(res, e);
        }
    });

    srv.Get("/jobs", [&orch](const httplib::Request&, httplib::Response& res) {
        json list = json::array();
        for (const auto& job : orch.jobs()) list.push_back(job_view(job));
        reply(res, 200, list);
    });

    srv.Get(R"(/jobs/([^/]+))", [&orch](const httplib::Request& req, httplib::Response& res) {
        try {
            reply(res, 200, job_view(orch.job_status(req.matches[1])));
        } catch (const Error& e) {
            reply_error(res, e);
        }
    });

    srv.Get("/regions/sensors", [&orch](const httplib::Request& req, httplib::Response& res) {
        try {
            RepositoryQuery q;
            try {
                q.region = Region::from_bounds(number_param(req, "min_lon"), number_param(req, "max_lon"),
                                               number_param(req, "min_lat"), number_param(req, "max_lat"));
            } catch (const ValidationError&) {
                throw;
            } catch (const Error& e) {
                throw ValidationError("region", e.what());
            }
            if (req.has_param("limit")) {
                double limit = number_param(req, "limit");
                if (limit < 1 || limit != static_cast<double>(static_cast<std::size_t>(limit)))
                    throw ValidationError("limit", "must be a count >= 1");
                q.limit = static_cast<std::size_t>(limit);
            }
            q.source = req.has_param("source") ? req.get_param_value("source") : "owm-fixture";
            auto preview = orch.preview(q);
            reply(res, 200,
                  {{"available", preview.available}, {"returned", preview.sensors.size()}, {"sensors", preview.sensors}});
        } catch (const Error& e) {
            reply_error(res, e);
        }
    });

    srv.Get(R"(/artifacts/([^/]+)/([^/]+)\.tar\.gz)", [&orch](const httplib::Request& req, httplib::Response& res) {
        const std::string job = req.matches[1];
        const std::string device = req.matches[2];
        if (!safe_component(job) || !safe_component(device)) {
            reply(res, 400, {{"error", "invalid-argument"}});
            return;
        }
        std::ifstream in(orch.archive_path(job, device), std::ios::binary);
        if (!in) {
            reply(res, 404, {{"error", "unknown-artifact"}});
            return;
        }
        std::ostringstream bytes;
        bytes << in.rdbuf();
        res.status = 200;
        res.set_content(bytes.str(), "application/gzip");
    });
}

OrchestratorServer::~OrchestratorServer() { stop(); }

std::uint16_t OrchestratorServer::start(const std::string& host, std::uint16_t port) {
    auto& srv = impl_->server;
    int bound = port == 0 ? srv.bind_to_any_port(host) : (srv.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw Error(ErrorCode::port_in_use, host + ":" + std::to_string(port));
    impl_->host = host;
    impl_->port = static_cast<std::uint16_t>(bound);
    impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
    srv.wait_until_ready();
    impl_->orchestrator.set_public_base_url(base_url());
    return impl_->port;
}

void OrchestratorServer::stop() {
    if (!impl_ || !impl_->thread.joinable()) return;
    impl_->server.stop();
    impl_->thread.join();
}

std::string OrchestratorServer::base_url() const {
    return "http://" + impl_->host + ":" + std::to_string(impl_->port);
}

}  // namespace vsfleet
