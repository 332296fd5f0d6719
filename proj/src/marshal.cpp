#include "vsfleet/marshal.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

#include "vsfleet/error.hpp"
#include "vsfleet/numfmt.hpp"
#include "vsfleet/xml.hpp"

namespace vsfleet {

namespace {

constexpr std::string_view kOutputFields = R"xml(      <field name="city" type="varchar(255)"/>
      <field name="country" type="varchar(255)"/>
      <field name="base" type="varchar(255)"/>
      <field name="temp" type="double"/>
      <field name="sea_level" type="double"/>
      <field name="pressure" type="double"/>
      <field name="humidity" type="double"/>
)xml";

std::string reading_summary(const GenericSensor& s) {
    const auto& m = s.measurements;
    std::string out = "observed_at=" + std::to_string(s.observed_at) + " temp=" + format_decimal(m.temperature) +
                      " humidity=" + format_decimal(m.humidity) + " pressure=" + format_decimal(m.pressure);
    if (m.sea_level) out += " sea_level=" + format_decimal(*m.sea_level);
    return out;
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw Error(ErrorCode::io_error, "cannot create " + path.string());
    const bool ok = std::fwrite(content.data(), 1, content.size(), f) == content.size();
    if (std::fclose(f) != 0 || !ok) throw Error(ErrorCode::io_error, "cannot write " + path.string());
}

std::string require_text(const xml::Element* e, const char* what) {
    if (!e) throw Error(ErrorCode::xml_invalid, std::string("descriptor lacks ") + what);
    return e->text;
}

std::string require_attr(const xml::Element* e, std::string_view key, const char* what) {
    const std::string* v = e ? e->attribute(key) : nullptr;
    if (!v) throw Error(ErrorCode::xml_invalid, std::string("descriptor lacks ") + what);
    return *v;
}

std::string shape_mismatch(const xml::Element& want, const xml::Element& got, const std::string& path) {
    const std::string here = path + "/" + want.name;
    if (want.name != got.name) return here + ": found element <" + got.name + ">";
    if (want.attributes.size() != got.attributes.size()) return here + ": attribute count differs";
    for (std::size_t i = 0; i < want.attributes.size(); ++i)
        if (want.attributes[i].first != got.attributes[i].first)
            return here + ": expected attribute " + want.attributes[i].first;
    if (want.children.size() != got.children.size()) return here + ": child count differs";
    for (std::size_t i = 0; i < want.children.size(); ++i)
        if (auto why = shape_mismatch(want.children[i], got.children[i], here); !why.empty()) return why;
    return {};
}

}  // namespace

void check_measurement_type(std::string_view measurement_type) {
    if (measurement_type != "temperature" && measurement_type != "humidity" && measurement_type != "pressure")
        throw Error(ErrorCode::invalid_measurement_type, std::string(measurement_type));
}

std::string descriptor_name(const GenericSensor& sensor) {
    std::string out;
    for (char c : sensor.name + std::to_string(sensor.id)) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') continue;
        if (c == '/' || c == '\\' || static_cast<unsigned char>(c) < 0x20) c = '_';
        out += c;
    }
    if (out == "." || out == "..") out = "_" + out;
    return out;
}

VirtualSensorDescriptor marshal(const GenericSensor& sensor, std::string_view measurement_type, int history_hours,
                                const DescriptorOptions& options) {
    check_measurement_type(measurement_type);
    if (history_hours <= 0) throw Error(ErrorCode::invalid_argument, "history must be positive");

    const std::string name = descriptor_name(sensor);
    const std::string history = std::to_string(history_hours) + "h";
    const std::string geographical = sensor.name + " " + std::to_string(sensor.id);

    std::string x;
    x.reserve(1800);
    x += "<?xml version=\"1.0\" encoding=\"UTF-8\" standalone=\"no\"?>\n";
    x += "<virtual-sensor name=\"" + xml::escape(name) + "\" priority=\"" + std::to_string(options.priority) + "\">\n";
    x += "  <processing-class>\n";
    x += "    <class-name>gsn.vsensor.BridgeVirtualSensor</class-name>\n";
    x += "    <init-params/>\n";
    x += "    <output-structure>\n";
    x += kOutputFields;
    x += "    </output-structure>\n";
    x += "  </processing-class>\n";
    x += "  <description>" + xml::escape(reading_summary(sensor)) + "</description>\n";
    x += "  <addressing>\n";
    x += "    <predicate key=\"geographical\">" + xml::escape(geographical) + "</predicate>\n";
    x += "    <predicate key=\"LATITUDE\">" + format_decimal(sensor.location.latitude()) + "</predicate>\n";
    x += "    <predicate key=\"LONGITUDE\">" + format_decimal(sensor.location.longitude()) + "</predicate>\n";
    x += "  </addressing>\n";
    x += "  <storage history-size=\"" + history + "\"/>\n";
    x += "  <streams>\n";
    x += "    <stream name=\"stream1\">\n";
    x += "      <source alias=\"source1\" sampling-rate=\"" + std::to_string(options.sampling_rate) +
         "\" storage-size=\"" + history + "\">\n";
    x += "        <address wrapper=\"openweathermap\">\n";
    x += "          <predicate key=\"url\">" + xml::escape(sensor.source_url) + "</predicate>\n";
    x += "          <predicate key=\"type\">" + std::string(measurement_type) + "</predicate>\n";
    x += "        </address>\n";
    x += "        <query>Select city, country, base, sea_level, temp, humidity, pressure from wrapper</query>\n";
    x += "      </source>\n";
    x += "      <query>Select * from source1</query>\n";
    x += "    </stream>\n";
    x += "  </streams>\n";
    x += "</virtual-sensor>\n";

    return VirtualSensorDescriptor{name, name + ".xml", std::move(x)};
}

std::vector<VirtualSensorDescriptor> marshal_batch(std::span<const GenericSensor> sensors,
                                                   std::string_view measurement_type, int history_hours,
                                                   const std::filesystem::path& store_dir,
                                                   const DescriptorOptions& options) {
    if (sensors.empty()) throw Error(ErrorCode::empty_sensor_list, "no sensors to marshal");
    check_measurement_type(measurement_type);

    std::vector<VirtualSensorDescriptor> out;
    out.reserve(sensors.size());
    std::unordered_map<std::string, std::size_t> seen;
    seen.reserve(sensors.size());
    for (const auto& s : sensors) {
        auto d = marshal(s, measurement_type, history_hours, options);
        auto [it, fresh] = seen.try_emplace(d.name, 0);
        if (!fresh) {
            // A suffixed name could itself collide with a later sensor; keep counting until free.
            std::string candidate;
            do {
                candidate = d.name + "-" + std::to_string(++it->second);
            } while (seen.contains(candidate));
            auto old_attr = "name=\"" + xml::escape(d.name) + "\"";
            d.content.replace(d.content.find(old_attr), old_attr.size(), "name=\"" + xml::escape(candidate) + "\"");
            d.name = candidate;
            d.file_name = candidate + ".xml";
            seen.emplace(candidate, 0);
        }
        out.push_back(std::move(d));
    }

    if (!store_dir.empty()) {
        std::filesystem::create_directories(store_dir);
        const std::size_t workers = std::max(1u, std::min(8u, std::thread::hardware_concurrency()));
        if (workers == 1) {
            for (const auto& d : out) write_file(store_dir / d.file_name, d.content);
        } else {
            std::vector<std::exception_ptr> errors(workers);
            std::vector<std::jthread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t i = w; i < out.size(); i += workers)
                            write_file(store_dir / out[i].file_name, out[i].content);
                    } catch (...) {
                        errors[w] = std::current_exception();
                    }
                });
            }
            pool.clear();
            for (auto& e : errors)
                if (e) std::rethrow_exception(e);
        }
    }
    return out;
}

DescriptorSummary parse_descriptor(std::string_view content) {
    auto root = xml::parse(content);
    if (root.name != "virtual-sensor") throw Error(ErrorCode::xml_invalid, "root element is not virtual-sensor");

    DescriptorSummary s;
    s.name = require_attr(&root, "name", "name attribute");
    s.priority = require_attr(&root, "priority", "priority attribute");
    s.description = root.child("description") ? root.child("description")->text : std::string{};

    const auto* addressing = root.child("addressing");
    if (!addressing) throw Error(ErrorCode::xml_invalid, "descriptor lacks addressing");
    s.geographical = require_text(addressing->child_with("predicate", "key", "geographical"), "geographical");
    s.latitude = require_text(addressing->child_with("predicate", "key", "LATITUDE"), "LATITUDE");
    s.longitude = require_text(addressing->child_with("predicate", "key", "LONGITUDE"), "LONGITUDE");
    s.storage_history = require_attr(root.child("storage"), "history-size", "storage history-size");

    const auto* streams = root.child("streams");
    const auto* stream = streams ? streams->child("stream") : nullptr;
    const auto* source = stream ? stream->child("source") : nullptr;
    s.source_history = require_attr(source, "storage-size", "source storage-size");
    const auto* address = source ? source->child("address") : nullptr;
    if (!address) throw Error(ErrorCode::xml_invalid, "descriptor lacks source address");
    s.url = require_text(address->child_with("predicate", "key", "url"), "url predicate");
    s.type = require_text(address->child_with("predicate", "key", "type"), "type predicate");
    return s;
}

std::optional<std::string> description_value(std::string_view description, std::string_view key) {
    std::istringstream words{std::string(description)};
    const std::string prefix = std::string(key) + "=";
    for (std::string w; words >> w;)
        if (w.starts_with(prefix)) return w.substr(prefix.size());
    return std::nullopt;
}

StructureDescription StructureDescription::from_string(std::string_view skeleton) {
    StructureDescription d;
    d.skeleton_ = xml::parse(skeleton);
    return d;
}

StructureDescription StructureDescription::from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return from_string(ss.str());
}

std::string StructureDescription::mismatch(std::string_view document) const {
    xml::Element got;
    try {
        got = xml::parse(document);
    } catch (const Error& e) {
        return e.what();
    }
    return shape_mismatch(skeleton_, got, "");
}

}  // namespace vsfleet
