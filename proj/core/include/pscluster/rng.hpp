#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace psc {

// Uniform in [0,1) from the top 53 bits of one engine draw.
inline double uniform53(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller normal deviates with the spare value cached, so draws come in a
// fixed engine-defined order (reruns with one seed are bit-identical).
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
    double u2 = uniform53(rng_);
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace psc
