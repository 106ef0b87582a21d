#pragma once

#include <cstdint>
#include <vector>

namespace psc {

// Adjusted Rand Index between two labelings of the same points, in [-1, 1];
// label values are arbitrary (only the induced partitions matter).  The
// pair-counting formula is evaluated in exact integer arithmetic before the
// single final division, so boundary cases (1.0, -0.5) come out exact.
double ari(const std::vector<std::int64_t>& labels_a, const std::vector<std::int64_t>& labels_b);

}  // namespace psc
