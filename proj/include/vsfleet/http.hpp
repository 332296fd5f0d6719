#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace vsfleet::http {

struct Url {
    std::string host;
    std::uint16_t port = 80;
    std::string target;  // path plus query, always starts with '/'
};

/// Parses "http://host[:port][/path]". Throws Error(invalid_argument) otherwise.
Url parse_url(std::string_view url);

enum class Transport { ok, unreachable, timeout, failed };

/// Outcome of one request. `status` and `body` are meaningful only when
/// `transport == Transport::ok`; otherwise `error` describes what went wrong.
struct Response {
    Transport transport = Transport::ok;
    std::string error;
    int status = 0;
    std::string body;

    bool delivered() const noexcept { return transport == Transport::ok; }
};

Response get(std::string_view url, std::chrono::milliseconds timeout);
Response post_json(std::string_view url, const std::string& body, std::chrono::milliseconds timeout);

}  // namespace vsfleet::http
