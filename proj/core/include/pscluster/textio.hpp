#pragma once

#include <string>

namespace psc {

// Shortest decimal form that round-trips through a double, e.g. "2", "0.5".
std::string format_double(double v);

}  // namespace psc
