#pragma once

#include <chrono>
#include <string>

namespace vsfleet {

/// Shortest decimal text that round-trips to `value`, never in exponent notation.
/// Negative zero prints as "0".
std::string format_decimal(double value);

/// Milliseconds with exactly three decimals, computed from integer microseconds
/// so that printed sums stay exact.
std::string format_ms(std::chrono::microseconds us);

}  // namespace vsfleet
