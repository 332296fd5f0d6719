#include "vsfleet/numfmt.hpp"

#include <array>
#include <charconv>
#include <cstdlib>

namespace vsfleet {

std::string format_decimal(double value) {
    if (value == 0.0) return "0";
    std::array<char, 512> buf{};
    auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::fixed);
    if (ec != std::errc{}) return "nan";
    return {buf.data(), end};
}

std::string format_ms(std::chrono::microseconds us) {
    auto count = us.count();
    std::string sign = count < 0 ? "-" : "";
    auto magnitude = static_cast<unsigned long long>(std::llabs(count));
    std::string frac = std::to_string(magnitude % 1000);
    frac.insert(0, 3 - frac.size(), '0');
    return sign + std::to_string(magnitude / 1000) + "." + frac;
}

}  // namespace vsfleet
