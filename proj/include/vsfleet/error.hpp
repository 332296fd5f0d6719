#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vsfleet {

enum class ErrorCode {
    invalid_argument,
    validation_failed,
    repository_unreachable,
    no_fixture_for_region,
    malformed_media_type,
    unparseable_payload,
    empty_sensor_list,
    unknown_criterion,
    invalid_measurement_type,
    empty_file_list,
    archive_corrupt,
    xml_invalid,
    unknown_job,
    port_in_use,
    empty_readings,
    duplicate_city,
    insufficient_replications,
    io_error,
};

/// Kebab-case name used in API payloads and CLI messages, e.g. "no-fixture-for-region".
std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Request validation failure carrying one message per offending field.
class ValidationError : public Error {
public:
    explicit ValidationError(std::map<std::string, std::string> fields);
    ValidationError(const std::string& field, const std::string& message)
        : ValidationError(std::map<std::string, std::string>{{field, message}}) {}

    const std::map<std::string, std::string>& fields() const noexcept { return fields_; }

private:
    std::map<std::string, std::string> fields_;
};

}  // namespace vsfleet
