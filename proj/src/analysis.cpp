#include "vsfleet/analysis.hpp"

#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "vsfleet/error.hpp"
#include "vsfleet/numfmt.hpp"

namespace vsfleet {

namespace {

constexpr double kKelvinAtFreezing = 273.15;

double reading_value(const CityReading& r, std::string_view field) {
    if (field == "temperature") return r.temperature - kKelvinAtFreezing;
    if (field == "humidity") return r.humidity;
    if (field == "pressure") return r.pressure;
    throw Error(ErrorCode::unknown_criterion, std::string(field));
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
        while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
        cells.push_back(cell);
    }
    return cells;
}

double parse_number(const std::string& text, std::size_t line_no) {
    try {
        std::size_t used = 0;
        double v = std::stod(text, &used);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::invalid_argument, "line " + std::to_string(line_no) + ": not a number: " + text);
}

}  // namespace

Disease parse_disease(std::string_view name) {
    if (name == "osteoarthritis") return Disease::osteoarthritis;
    if (name == "arthritis") return Disease::arthritis;
    if (name == "fibromyalgia") return Disease::fibromyalgia;
    throw Error(ErrorCode::invalid_argument, "unknown disease " + std::string(name));
}

std::string_view to_string(Disease d) noexcept {
    switch (d) {
        case Disease::osteoarthritis: return "osteoarthritis";
        case Disease::arthritis: return "arthritis";
        case Disease::fibromyalgia: return "fibromyalgia";
    }
    return "arthritis";
}

void CityReading::validate() const {
    if (city.empty()) throw ValidationError("city", "required");
    if (!std::isfinite(temperature) || temperature <= 0.0)
        throw ValidationError("temperature", city + ": must be a positive kelvin value");
    if (!std::isfinite(pressure) || pressure <= 0.0) throw ValidationError("pressure", city + ": must be positive");
    if (!std::isfinite(humidity) || humidity < 0.0 || humidity > 100.0)
        throw ValidationError("humidity", city + ": must be within 0..100");
}

DiseaseProfile DiseaseProfile::for_disease(Disease d) {
    DiseaseProfile p;
    p.disease = d;
    p.criteria.push_back({"temperature", Direction::maximize});
    if (d != Disease::fibromyalgia) p.criteria.push_back({"humidity", Direction::minimize});
    if (d != Disease::osteoarthritis) p.criteria.push_back({"pressure", Direction::minimize});
    return p;
}

DecisionMatrix city_matrix(std::span<const CityReading> readings, const DiseaseProfile& profile) {
    std::vector<std::string> options;
    std::vector<double> values;
    for (const auto& r : readings) {
        options.push_back(r.city);
        for (const auto& c : profile.criteria) values.push_back(reading_value(r, c.name));
    }
    return DecisionMatrix(std::move(options), profile.criteria, std::move(values));
}

std::vector<CityRank> rank_cities(std::span<const CityReading> readings, const DiseaseProfile& profile) {
    if (readings.empty()) throw Error(ErrorCode::empty_readings, "no city readings");
    std::unordered_set<std::string> seen;
    for (const auto& r : readings) {
        r.validate();
        if (!seen.insert(r.city).second) throw Error(ErrorCode::duplicate_city, r.city);
    }
    auto result = rank(city_matrix(readings, profile));
    std::vector<CityRank> out;
    out.reserve(readings.size());
    for (auto i : result.order) out.push_back({readings[i].city, readings[i].country, result.closeness[i]});
    return out;
}

std::vector<CityReading> windowed_means(std::span<const TimedReading> samples, std::int64_t start, std::int64_t end) {
    if (start >= end) throw Error(ErrorCode::invalid_argument, "window start must precede its end");
    struct Sums {
        CityReading first;
        double temperature = 0.0, pressure = 0.0, humidity = 0.0;
        std::size_t n = 0;
    };
    std::vector<std::string> order;
    std::map<std::string, Sums> sums;
    for (const auto& s : samples) {
        if (s.observed_at < start || s.observed_at > end) continue;
        auto [it, fresh] = sums.try_emplace(s.reading.city);
        if (fresh) {
            it->second.first = s.reading;
            order.push_back(s.reading.city);
        }
        it->second.temperature += s.reading.temperature;
        it->second.pressure += s.reading.pressure;
        it->second.humidity += s.reading.humidity;
        ++it->second.n;
    }
    std::vector<CityReading> out;
    for (const auto& city : order) {
        const auto& s = sums.at(city);
        const auto n = static_cast<double>(s.n);
        out.push_back({city, s.first.country, s.temperature / n, s.pressure / n, s.humidity / n});
    }
    return out;
}

std::vector<CityReading> read_city_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::invalid_argument, "empty readings file");
    const std::vector<std::string> expected = {"city", "country", "temp_k", "pressure_hpa", "humidity_pct"};
    if (split_csv_line(line) != expected)
        throw Error(ErrorCode::invalid_argument, "expected header city,country,temp_k,pressure_hpa,humidity_pct");
    std::vector<CityReading> out;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.find_first_not_of(" \r\t") == std::string::npos) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != 5) throw Error(ErrorCode::invalid_argument, "line " + std::to_string(line_no) + ": need 5 fields");
        CityReading r{cells[0], cells[1], parse_number(cells[2], line_no), parse_number(cells[3], line_no),
                      parse_number(cells[4], line_no)};
        r.validate();
        out.push_back(std::move(r));
    }
    return out;
}

void write_city_csv(std::ostream& out, std::span<const CityReading> readings) {
    out << "city,country,temp_k,pressure_hpa,humidity_pct\n";
    for (const auto& r : readings)
        out << r.city << ',' << r.country << ',' << format_decimal(r.temperature) << ','
            << format_decimal(r.pressure) << ',' << format_decimal(r.humidity) << '\n';
}

void write_ranking_csv(std::ostream& out, std::span<const CityRank> ranking) {
    out << "rank,city,country,closeness\n";
    for (std::size_t i = 0; i < ranking.size(); ++i)
        out << i + 1 << ',' << ranking[i].city << ',' << ranking[i].country << ','
            << format_decimal(ranking[i].closeness) << '\n';
}

}  // namespace vsfleet
