#include "vsfleet/http.hpp"

#include <charconv>

#include <httplib.h>

#include "vsfleet/error.hpp"

namespace vsfleet::http {

Url parse_url(std::string_view url) {
    constexpr std::string_view scheme = "http://";
    if (!url.starts_with(scheme)) throw Error(ErrorCode::invalid_argument, "unsupported url: " + std::string(url));
    url.remove_prefix(scheme.size());

    Url out;
    auto slash = url.find('/');
    std::string_view authority = url.substr(0, slash);
    out.target = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));

    auto colon = authority.rfind(':');
    if (colon != std::string_view::npos) {
        auto port_text = authority.substr(colon + 1);
        unsigned port = 0;
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port == 0 || port > 65535)
            throw Error(ErrorCode::invalid_argument, "bad port in url: " + std::string(url));
        out.port = static_cast<std::uint16_t>(port);
        authority = authority.substr(0, colon);
    }
    if (authority.empty()) throw Error(ErrorCode::invalid_argument, "missing host in url");
    out.host = std::string(authority);
    return out;
}

namespace {

httplib::Client make_client(const Url& u, std::chrono::milliseconds timeout) {
    httplib::Client client(u.host, u.port);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(
        std::min(timeout, std::chrono::milliseconds(5000))));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    return client;
}

Response finish(const httplib::Result& result, std::string_view url) {
    Response out;
    if (result) {
        out.status = result->status;
        out.body = result->body;
        return out;
    }
    switch (result.error()) {
        case httplib::Error::Connection:
        case httplib::Error::ConnectionTimeout: out.transport = Transport::unreachable; break;
        case httplib::Error::Read: out.transport = Transport::timeout; break;
        default: out.transport = Transport::failed; break;
    }
    out.error = httplib::to_string(result.error()) + " (" + std::string(url) + ")";
    return out;
}

}  // namespace

Response get(std::string_view url, std::chrono::milliseconds timeout) {
    auto u = parse_url(url);
    auto client = make_client(u, timeout);
    return finish(client.Get(u.target), url);
}

Response post_json(std::string_view url, const std::string& body, std::chrono::milliseconds timeout) {
    auto u = parse_url(url);
    auto client = make_client(u, timeout);
    return finish(client.Post(u.target, body, "application/json"), url);
}

}  // namespace vsfleet::http
