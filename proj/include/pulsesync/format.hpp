#pragma once

#include <iosfwd>
#include <string>

namespace pulsesync {

/// Shortest decimal that round-trips to the same double (at most 17
/// significant digits). "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double value);

void write_double(std::ostream& out, double value);

}  // namespace pulsesync
