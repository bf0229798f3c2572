#include "pulsesync/format.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <system_error>

namespace pulsesync {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, ptr);
}

void write_double(std::ostream& out, double value) { out << format_double(value); }

}  // namespace pulsesync
