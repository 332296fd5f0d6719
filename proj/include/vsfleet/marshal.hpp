#pragma once

// Marshals GenericSensor records into GSN virtual-sensor descriptors.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vsfleet/sensor_model.hpp"
#include "vsfleet/xml.hpp"

namespace vsfleet {

struct VirtualSensorDescriptor {
    std::string name;
    std::string file_name;  // name + ".xml"
    std::string content;  // UTF-8 XML, LF line endings
};

struct DescriptorOptions {
    int priority = 10;
    int sampling_rate = 1;
};

/// "temperature", "humidity" or "pressure"; throws Error(invalid_measurement_type).
void check_measurement_type(std::string_view measurement_type);

/// Sensor name followed by its id, with whitespace removed and path
/// separators replaced by '_' so the result is a plain file name.
std::string descriptor_name(const GenericSensor& sensor);

/// Pure: identical input yields byte-identical content.
VirtualSensorDescriptor marshal(const GenericSensor& sensor, std::string_view measurement_type, int history_hours,
                                const DescriptorOptions& options = {});

/// One descriptor per sensor, in input order. Colliding names get "-1", "-2", ...
/// suffixes. When `store_dir` is non-empty every descriptor is also written to
/// `store_dir/<name>.xml`. Any failure aborts the whole batch.
std::vector<VirtualSensorDescriptor> marshal_batch(std::span<const GenericSensor> sensors,
                                                   std::string_view measurement_type, int history_hours,
                                                   const std::filesystem::path& store_dir = {},
                                                   const DescriptorOptions& options = {});

/// Fields recovered from a descriptor document.
struct DescriptorSummary {
    std::string name;
    std::string priority;
    std::string geographical;
    std::string latitude;
    std::string longitude;
    std::string storage_history;
    std::string source_history;
    std::string url;
    std::string type;
    std::string description;
};

/// Throws Error(xml_invalid) when the document is malformed or lacks a field.
DescriptorSummary parse_descriptor(std::string_view content);

/// Value of `key=value` inside a descriptor description, if present.
std::optional<std::string> description_value(std::string_view description, std::string_view key);

/// Element/attribute shape every descriptor must follow, taken from a
/// skeleton document. Text content and attribute values are ignored.
class StructureDescription {
public:
    static StructureDescription from_string(std::string_view skeleton);
    static StructureDescription from_file(const std::filesystem::path& path);

    /// Empty when `document` matches; otherwise the first mismatch.
    std::string mismatch(std::string_view document) const;
    bool matches(std::string_view document) const { return mismatch(document).empty(); }

private:
    xml::Element skeleton_;
};

}  // namespace vsfleet
