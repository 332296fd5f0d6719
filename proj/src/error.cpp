#include "vsfleet/error.hpp"

namespace vsfleet {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid-argument";
        case ErrorCode::validation_failed: return "validation-failed";
        case ErrorCode::repository_unreachable: return "repository-unreachable";
        case ErrorCode::no_fixture_for_region: return "no-fixture-for-region";
        case ErrorCode::malformed_media_type: return "malformed-media-type";
        case ErrorCode::unparseable_payload: return "unparseable-payload";
        case ErrorCode::empty_sensor_list: return "empty-sensor-list";
        case ErrorCode::unknown_criterion: return "unknown-criterion-name";
        case ErrorCode::invalid_measurement_type: return "invalid-measurement-type";
        case ErrorCode::empty_file_list: return "empty-file-list";
        case ErrorCode::archive_corrupt: return "archive-corrupt";
        case ErrorCode::xml_invalid: return "xml-invalid";
        case ErrorCode::unknown_job: return "unknown-job";
        case ErrorCode::port_in_use: return "port-in-use";
        case ErrorCode::empty_readings: return "empty-readings";
        case ErrorCode::duplicate_city: return "duplicate-city";
        case ErrorCode::insufficient_replications: return "insufficient-replications";
        case ErrorCode::io_error: return "io-error";
    }
    return "unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

namespace {

std::string join_fields(const std::map<std::string, std::string>& fields) {
    std::string out;
    for (const auto& [field, message] : fields) {
        if (!out.empty()) out += "; ";
        out += field + ": " + message;
    }
    return out;
}

}  // namespace

ValidationError::ValidationError(std::map<std::string, std::string> fields)
    : Error(ErrorCode::validation_failed, join_fields(fields)), fields_(std::move(fields)) {}

}  // namespace vsfleet
