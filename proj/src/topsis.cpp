#include "vsfleet/topsis.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <numeric>
#include <unordered_set>

#include "vsfleet/error.hpp"
#include "vsfleet/numfmt.hpp"
#include "vsfleet/random.hpp"

namespace vsfleet {

Direction parse_direction(std::string_view text) {
    if (text == "max" || text == "maximize") return Direction::maximize;
    if (text == "min" || text == "minimize") return Direction::minimize;
    throw Error(ErrorCode::invalid_argument, "unknown criterion direction: " + std::string(text));
}

std::string_view to_string(Direction d) noexcept { return d == Direction::maximize ? "max" : "min"; }

DecisionMatrix::DecisionMatrix(std::vector<std::string> options, std::vector<CriterionSpec> criteria,
                               std::vector<double> values)
    : options_(std::move(options)), criteria_(std::move(criteria)), values_(std::move(values)) {
    if (options_.empty()) throw Error(ErrorCode::invalid_argument, "decision matrix needs at least one option");
    if (criteria_.empty()) throw Error(ErrorCode::invalid_argument, "decision matrix needs at least one criterion");
    if (values_.size() != options_.size() * criteria_.size())
        throw Error(ErrorCode::invalid_argument, "decision matrix values do not match its shape");
    std::unordered_set<std::string> names;
    for (const auto& c : criteria_)
        if (!names.insert(c.name).second) throw Error(ErrorCode::invalid_argument, "duplicate criterion " + c.name);
    for (double v : values_)
        if (!std::isfinite(v)) throw Error(ErrorCode::invalid_argument, "decision matrix entries must be finite");
}

DecisionMatrix normalize(const DecisionMatrix& m) {
    const std::size_t rows = m.rows();
    const std::size_t cols = m.cols();
    std::vector<double> out(rows * cols, 0.0);
    for (std::size_t j = 0; j < cols; ++j) {
        double sum_sq = 0.0;
        for (std::size_t i = 0; i < rows; ++i) sum_sq += m.at(i, j) * m.at(i, j);
        const double norm = std::sqrt(sum_sq);
        if (norm == 0.0) continue;
        for (std::size_t i = 0; i < rows; ++i) out[i * cols + j] = m.at(i, j) / norm;
    }
    return DecisionMatrix(m.options(), m.criteria(), std::move(out));
}

IdealPoints ideal_points(const DecisionMatrix& normalized) {
    const std::size_t cols = normalized.cols();
    IdealPoints p{std::vector<double>(cols), std::vector<double>(cols)};
    for (std::size_t j = 0; j < cols; ++j) {
        double lo = normalized.at(0, j);
        double hi = lo;
        for (std::size_t i = 1; i < normalized.rows(); ++i) {
            lo = std::min(lo, normalized.at(i, j));
            hi = std::max(hi, normalized.at(i, j));
        }
        const bool maximize = normalized.criteria()[j].direction == Direction::maximize;
        p.positive[j] = maximize ? hi : lo;
        p.negative[j] = maximize ? lo : hi;
    }
    return p;
}

namespace {

TopsisResult rank_normalized(const DecisionMatrix& normalized) {
    const std::size_t rows = normalized.rows();
    const std::size_t cols = normalized.cols();
    auto ideals = ideal_points(normalized);

    TopsisResult r;
    r.closeness.resize(rows);
    r.distance_positive.resize(rows);
    r.distance_negative.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        double to_best = 0.0;
        double to_worst = 0.0;
        for (std::size_t j = 0; j < cols; ++j) {
            const double dp = normalized.at(i, j) - ideals.positive[j];
            const double dn = normalized.at(i, j) - ideals.negative[j];
            to_best += dp * dp;
            to_worst += dn * dn;
        }
        r.distance_positive[i] = std::sqrt(to_best);
        r.distance_negative[i] = std::sqrt(to_worst);
        const double total = r.distance_positive[i] + r.distance_negative[i];
        r.closeness[i] = total == 0.0 ? 0.5 : r.distance_negative[i] / total;
    }

    r.order.resize(rows);
    std::iota(r.order.begin(), r.order.end(), std::size_t{0});
    std::stable_sort(r.order.begin(), r.order.end(),
                     [&](std::size_t a, std::size_t b) { return r.closeness[a] > r.closeness[b]; });
    r.ideal_positive = std::move(ideals.positive);
    r.ideal_negative = std::move(ideals.negative);
    return r;
}

}  // namespace

TopsisResult rank(const DecisionMatrix& m) { return rank_normalized(normalize(m)); }

TopsisResult rank(const DecisionMatrix& m, std::span<const double> weights) {
    if (weights.size() != m.cols()) throw Error(ErrorCode::invalid_argument, "one weight per criterion required");
    for (double w : weights)
        if (!std::isfinite(w) || w <= 0.0) throw Error(ErrorCode::invalid_argument, "weights must be positive");

    auto normalized = normalize(m);
    std::vector<double> weighted(normalized.values().begin(), normalized.values().end());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) weighted[i * m.cols() + j] *= weights[j];
    return rank_normalized(DecisionMatrix(m.options(), m.criteria(), std::move(weighted)));
}

std::vector<CriterionSpec> default_context_criteria() {
    return {
        {"battery", Direction::maximize},
        {"price", Direction::minimize},
        {"drift", Direction::minimize},
        {"frequency", Direction::maximize},
        {"energy_consumption", Direction::minimize},
        {"response_time", Direction::minimize},
    };
}

std::vector<GenericSensor> select_top(std::span<const GenericSensor> sensors, std::span<const CriterionSpec> criteria,
                                      std::size_t k) {
    if (sensors.empty()) throw Error(ErrorCode::empty_sensor_list, "nothing to rank");
    if (k == 0) throw Error(ErrorCode::invalid_argument, "k must be >= 1");
    if (criteria.empty()) throw Error(ErrorCode::invalid_argument, "at least one criterion required");
    for (const auto& c : criteria) context_value(ContextVector{}, c.name);

    std::vector<std::string> options;
    options.reserve(sensors.size());
    std::vector<double> values;
    values.reserve(sensors.size() * criteria.size());
    for (const auto& s : sensors) {
        options.push_back(std::to_string(s.id));
        for (const auto& c : criteria) values.push_back(context_value(s.context, c.name));
    }
    auto result = rank(DecisionMatrix(std::move(options), {criteria.begin(), criteria.end()}, std::move(values)));

    const std::size_t take = std::min(k, sensors.size());
    std::vector<GenericSensor> out;
    out.reserve(take);
    for (std::size_t n = 0; n < take; ++n) out.push_back(sensors[result.order[n]]);
    return out;
}

std::vector<GenericSensor> select_random(std::span<const GenericSensor> sensors, std::size_t k, std::uint64_t seed) {
    if (sensors.empty()) throw Error(ErrorCode::empty_sensor_list, "nothing to sample");
    if (k == 0) throw Error(ErrorCode::invalid_argument, "k must be >= 1");

    std::vector<std::size_t> index(sensors.size());
    std::iota(index.begin(), index.end(), std::size_t{0});
    const std::size_t take = std::min(k, sensors.size());
    SeededStream rng({0x72616e646f6d3031ULL, seed});
    // Partial Fisher-Yates: the first `take` slots end up a uniform sample.
    for (std::size_t n = 0; n < take; ++n) {
        auto pick = n + static_cast<std::size_t>(rng.below(index.size() - n));
        std::swap(index[n], index[pick]);
    }
    std::vector<GenericSensor> out;
    out.reserve(take);
    for (std::size_t n = 0; n < take; ++n) out.push_back(sensors[index[n]]);
    return out;
}

namespace {

std::vector<std::string> csv_cells(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        const auto first = cell.find_first_not_of(" \t\r");
        const auto last = cell.find_last_not_of(" \t\r");
        cells.push_back(first == std::string::npos ? std::string() : cell.substr(first, last - first + 1));
    }
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

}  // namespace

DecisionMatrix read_decision_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::invalid_argument, "empty matrix input");
    auto header = csv_cells(line);
    const bool labelled = !header.empty() && header.front() == "option";
    std::vector<CriterionSpec> criteria;
    for (std::size_t c = labelled ? 1 : 0; c < header.size(); ++c) {
        const auto colon = header[c].rfind(':');
        if (colon == std::string::npos)
            throw Error(ErrorCode::invalid_argument, "header cell '" + header[c] + "' is not name:max|min");
        criteria.push_back({header[c].substr(0, colon), parse_direction(header[c].substr(colon + 1))});
    }

    std::vector<std::string> options;
    std::vector<double> values;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        auto cells = csv_cells(line);
        if (cells.size() != header.size())
            throw Error(ErrorCode::invalid_argument, "line " + std::to_string(line_no) + ": expected " +
                                                         std::to_string(header.size()) + " fields");
        options.push_back(labelled ? cells.front() : std::to_string(options.size() + 1));
        for (std::size_t c = labelled ? 1 : 0; c < cells.size(); ++c) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cells[c], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used == 0 || used != cells[c].size())
                throw Error(ErrorCode::invalid_argument,
                            "line " + std::to_string(line_no) + ": not a number: " + cells[c]);
            values.push_back(v);
        }
    }
    return DecisionMatrix(std::move(options), std::move(criteria), std::move(values));
}

void write_ranking_csv(std::ostream& out, const DecisionMatrix& m, const TopsisResult& result) {
    out << "rank,option,closeness\n";
    for (std::size_t r = 0; r < result.order.size(); ++r) {
        const auto i = result.order[r];
        out << r + 1 << ',' << m.options()[i] << ',' << format_decimal(result.closeness[i]) << '\n';
    }
}

}  // namespace vsfleet
