#include "pscluster/ari.hpp"

#include <map>
#include <utility>

#include "pscluster/errors.hpp"

namespace psc {
namespace {

std::int64_t choose2(std::int64_t c) { return c * (c - 1) / 2; }

}  // namespace

double ari(const std::vector<std::int64_t>& labels_a, const std::vector<std::int64_t>& labels_b) {
  if (labels_a.size() != labels_b.size())
    throw DomainError("labelings must cover the same points");
  if (labels_a.empty()) throw DomainError("labelings must be nonempty");
  const auto n = static_cast<std::int64_t>(labels_a.size());

  std::map<std::int64_t, std::int64_t> row_sizes;
  std::map<std::int64_t, std::int64_t> col_sizes;
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> cells;
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    ++row_sizes[labels_a[i]];
    ++col_sizes[labels_b[i]];
    ++cells[{labels_a[i], labels_b[i]}];
  }

  std::int64_t sum_rows = 0, sum_cols = 0, sum_cells = 0;
  for (const auto& [label, size] : row_sizes) sum_rows += choose2(size);
  for (const auto& [label, size] : col_sizes) sum_cols += choose2(size);
  for (const auto& [cell, size] : cells) sum_cells += choose2(size);
  const std::int64_t total = choose2(n);

  // ARI = (sij - sa*sb/t) / ((sa+sb)/2 - sa*sb/t), scaled through by 2t.
  const std::int64_t numerator = 2 * total * sum_cells - 2 * sum_rows * sum_cols;
  const std::int64_t denominator = total * (sum_rows + sum_cols) - 2 * sum_rows * sum_cols;
  if (denominator == 0) return 1.0;  // both partitions degenerate and equal by pairs
  return static_cast<double>(numerator) / static_cast<double>(denominator);
}

}  // namespace psc
