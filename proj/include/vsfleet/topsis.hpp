#pragma once

// TOPSIS ranking of options by closeness to the ideal solution, plus a
// seeded random baseline selector.
//
// Given an options x criteria matrix Q:
//   q'_ij = q_ij / sqrt(sum_i q_ij^2)           column-wise vector normalization
//   p+_j  = best q'_ij,  p-_j = worst q'_ij      best = max for maximize criteria
//   s+_i  = ||q'_i - p+||,  s-_i = ||q'_i - p-||
//   c_i   = s-_i / (s+_i + s-_i)
// and options are returned best first (descending c_i).

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "vsfleet/sensor_model.hpp"

namespace vsfleet {

enum class Direction { maximize, minimize };

struct CriterionSpec {
    std::string name;
    Direction direction = Direction::maximize;

    bool operator==(const CriterionSpec&) const = default;
};

/// "max"/"maximize" or "min"/"minimize"; throws Error(invalid_argument).
Direction parse_direction(std::string_view text);
std::string_view to_string(Direction d) noexcept;

/// Options (rows) by criteria (columns), stored row-major. All entries finite.
class DecisionMatrix {
public:
    /// Throws Error(invalid_argument) on shape mismatch, empty dimensions,
    /// duplicate criterion names or non-finite entries.
    DecisionMatrix(std::vector<std::string> options, std::vector<CriterionSpec> criteria, std::vector<double> values);

    std::size_t rows() const noexcept { return options_.size(); }
    std::size_t cols() const noexcept { return criteria_.size(); }

    double at(std::size_t option, std::size_t criterion) const noexcept {
        return values_[option * criteria_.size() + criterion];
    }

    const std::vector<std::string>& options() const noexcept { return options_; }
    const std::vector<CriterionSpec>& criteria() const noexcept { return criteria_; }
    std::span<const double> values() const noexcept { return values_; }

private:
    std::vector<std::string> options_;
    std::vector<CriterionSpec> criteria_;
    std::vector<double> values_;
};

struct IdealPoints {
    std::vector<double> positive;
    std::vector<double> negative;
};

struct TopsisResult {
    std::vector<std::size_t> order;  // option indices, best first
    std::vector<double> closeness;  // per option, in [0, 1]
    std::vector<double> ideal_positive;
    std::vector<double> ideal_negative;
    std::vector<double> distance_positive;
    std::vector<double> distance_negative;
};

/// Zero-norm columns stay all-zero.
DecisionMatrix normalize(const DecisionMatrix& m);

IdealPoints ideal_points(const DecisionMatrix& normalized);

/// When s+ + s- is zero the closeness is 0.5; ties keep input order.
TopsisResult rank(const DecisionMatrix& m);

/// Weighted variant: normalized column j is multiplied by weights[j] (> 0)
/// before the ideal points are taken. Unit weights reproduce rank(m).
TopsisResult rank(const DecisionMatrix& m, std::span<const double> weights);

/// Battery and frequency are maximized; price, drift, energy consumption and
/// response time are minimized.
std::vector<CriterionSpec> default_context_criteria();

/// Ranks sensors on the named ContextVector fields and returns the best
/// min(k, n). Throws Error(empty_sensor_list) or Error(unknown_criterion).
std::vector<GenericSensor> select_top(std::span<const GenericSensor> sensors, std::span<const CriterionSpec> criteria,
                                      std::size_t k);

/// Reads a matrix from CSV. The header names each criterion as `name:max` or
/// `name:min`; an optional leading `option` column labels the rows, which are
/// otherwise labelled 1, 2, ... Throws Error(invalid_argument).
DecisionMatrix read_decision_csv(std::istream& in);

/// `rank,option,closeness`, best first.
void write_ranking_csv(std::ostream& out, const DecisionMatrix& m, const TopsisResult& result);

/// Uniform sample without replacement of min(k, n) sensors, deterministic in seed.
std::vector<GenericSensor> select_random(std::span<const GenericSensor> sensors, std::size_t k, std::uint64_t seed);

}  // namespace vsfleet
