#include "pscluster/textio.hpp"

#include <charconv>

namespace psc {

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace psc
