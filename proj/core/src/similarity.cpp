#include "pscluster/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "pscluster/errors.hpp"
#include "pscluster/rng.hpp"

namespace psc {

double gaussian_similarity(const std::vector<double>& xi, const std::vector<double>& xj,
                           double sigma) {
  if (xi.size() != xj.size())
    throw DomainError("point dimensions differ: " + std::to_string(xi.size()) + " vs " +
                      std::to_string(xj.size()));
  if (!(sigma > 0)) throw DomainError("sigma must be positive");
  double sq = 0.0;
  for (std::size_t c = 0; c < xi.size(); ++c) {
    double diff = xi[c] - xj[c];
    sq += diff * diff;
  }
  return std::exp(-sq / (2.0 * sigma * sigma));
}

std::vector<std::int64_t> pair_indices(std::int64_t i, std::int64_t n) {
  if (n < 1) throw DomainError("point count must be positive");
  std::int64_t groups = (n + 1) / 2;
  if (i < 1 || i > groups)
    throw DomainError("pair index " + std::to_string(i) + " outside 1..=" + std::to_string(groups));
  std::int64_t partner = n - i + 1;
  if (partner == i) return {i};
  return {i, partner};
}

std::int64_t default_sparsify_t(std::int64_t n) {
  if (n < 1) throw DomainError("point count must be positive");
  std::int64_t t = 1;
  std::int64_t ceil_log2 = 0;
  while ((std::int64_t{1} << ceil_log2) < n) ++ceil_log2;
  return t + ceil_log2;
}

double default_sigma(const PointSet& points, std::uint64_t seed) {
  const std::int64_t n = points.size();
  if (n < 2) return 1.0;
  std::mt19937_64 rng(seed);
  std::vector<double> sample;
  sample.reserve(1000);
  for (int s = 0; s < 1000; ++s) {
    auto i = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n));
    std::int64_t j = i;
    while (j == i) j = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(n));
    double sq = 0.0;
    const auto& xi = points.points[static_cast<std::size_t>(i)];
    const auto& xj = points.points[static_cast<std::size_t>(j)];
    for (std::size_t c = 0; c < xi.size(); ++c) {
      double diff = xi[c] - xj[c];
      sq += diff * diff;
    }
    sample.push_back(std::sqrt(sq));
  }
  std::sort(sample.begin(), sample.end());
  double median = (sample[499] + sample[500]) / 2.0;
  return median > 0 ? median : 1.0;  // identical points: any positive bandwidth works
}

namespace {

constexpr const char* kKernelCounter = "kernel_evaluations";

// Per-task write buffer: cells grouped by destination row, flushed once per
// row at task end so the store sees one put per (task, row).
class CellBuffer {
 public:
  void add(std::int64_t row, std::int64_t column, double value) {
    cells_[row].push_back({column, value});
  }

  void flush(KvStore& store, const std::string& table) {
    for (auto& [row, cells] : cells_) store.put_cells({table, row}, std::move(cells));
    cells_.clear();
  }

 private:
  std::map<std::int64_t, std::vector<RowEntry>> cells_;
};

std::vector<std::int64_t> iota_keys(std::int64_t count) {
  std::vector<std::int64_t> keys(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) keys[static_cast<std::size_t>(i)] = i;
  return keys;
}

}  // namespace

SimilarityBuild build_similarity(const PointSet& points, const SimilarityParams& params,
                                 mr::Engine& engine, KvStore& store, const std::string& table) {
  const std::int64_t n = points.size();
  if (n < 1) throw DomainError("point count must be positive");
  if (params.sparsify_t && *params.sparsify_t < 1) throw DomainError("sparsify_t must be positive");
  const double t0 = mr::detail::seconds_since_epoch_start();

  const bool sparsify = params.sparsify_t.has_value();
  const std::string build_table = sparsify ? table + ".full" : table;
  store.drop_table(build_table);
  if (sparsify) store.drop_table(table);

  // Upper-triangle pass: task g owns rows g and n-1-g (the 0-based form of
  // the i / n-i+1 pairing), computes S_rj for j >= r, and mirrors each value
  // into the partner row's cell so every kernel is evaluated exactly once.
  const auto groups = mr::Engine::partition(iota_keys((n + 1) / 2), engine.workers());
  std::vector<mr::Counters> task_counters(groups.size());
  engine.run_tasks(groups.size(), [&](std::size_t task) {
    mr::Counters& counters = task_counters[task];
    counters.add(kKernelCounter, 0);
    CellBuffer buffer;
    for (std::int64_t g : groups[task]) {
      const std::int64_t partner = n - 1 - g;
      const std::int64_t rows_of_group[2] = {g, partner};
      const int row_count = (g == partner) ? 1 : 2;  // odd-n middle row pairs with itself
      for (int idx = 0; idx < row_count; ++idx) {
        const std::int64_t r = rows_of_group[idx];
        for (std::int64_t j = r; j < n; ++j) {
          double v = gaussian_similarity(points.points[static_cast<std::size_t>(r)],
                                         points.points[static_cast<std::size_t>(j)], params.sigma);
          counters.add(kKernelCounter, 1);
          if (v != 0.0) {
            buffer.add(r, j, v);
            if (j != r) buffer.add(j, r, v);
          }
        }
      }
    }
    buffer.flush(store, build_table);
  });

  if (sparsify) {
    // Retention pass: each row keeps its t largest off-diagonal entries and
    // writes the kept cells under both endpoints (union re-symmetrization).
    // A cell may be written twice, but always with the same value.
    const std::int64_t t = *params.sparsify_t;
    const auto blocks = mr::Engine::partition(iota_keys(n), engine.workers());
    engine.run_tasks(blocks.size(), [&](std::size_t task) {
      CellBuffer buffer;
      for (std::int64_t i : blocks[task]) {
        RowPtr row = store.get_row({build_table, i});
        if (!row) continue;
        std::vector<RowEntry> offdiag;
        offdiag.reserve(row->entries.size());
        for (const auto& e : row->entries) {
          if (e.column == i) {
            buffer.add(i, i, e.value);  // diagonal rides along untouched
          } else {
            offdiag.push_back(e);
          }
        }
        auto keep = std::min<std::size_t>(static_cast<std::size_t>(t), offdiag.size());
        std::partial_sort(offdiag.begin(), offdiag.begin() + static_cast<std::ptrdiff_t>(keep),
                          offdiag.end(), [](const RowEntry& a, const RowEntry& b) {
                            if (a.value != b.value) return a.value > b.value;
                            return a.column < b.column;
                          });
        for (std::size_t s = 0; s < keep; ++s) {
          buffer.add(i, offdiag[s].column, offdiag[s].value);
          buffer.add(offdiag[s].column, i, offdiag[s].value);
        }
      }
      buffer.flush(store, table);
    });
    store.drop_table(build_table);
  }

  SimilarityBuild out;
  out.matrix = {n, table, /*unit_diagonal=*/true};
  out.report.stage = "similarity";
  out.report.workers = engine.workers();
  out.report.task_counters = std::move(task_counters);
  for (const auto& c : out.report.task_counters) out.report.op_counters.merge(c);
  out.report.wall_seconds = mr::detail::seconds_since_epoch_start() - t0;
  return out;
}

SimilarityBuild graph_similarity(const Graph& g, KvStore& store, const std::string& table) {
  const double t0 = mr::detail::seconds_since_epoch_start();
  store.drop_table(table);
  std::vector<std::vector<RowEntry>> rows(static_cast<std::size_t>(g.vertex_count));
  for (const auto& e : g.edges) {
    if (e.weight == 0.0) continue;  // absent and zero-weight edges read the same
    rows[static_cast<std::size_t>(e.u)].push_back({e.v, e.weight});
    rows[static_cast<std::size_t>(e.v)].push_back({e.u, e.weight});
  }
  for (std::int64_t i = 0; i < g.vertex_count; ++i) {
    auto& entries = rows[static_cast<std::size_t>(i)];
    std::sort(entries.begin(), entries.end(),
              [](const RowEntry& a, const RowEntry& b) { return a.column < b.column; });
    store.put_row({table, i}, SparseRow{std::move(entries)});
  }

  SimilarityBuild out;
  out.matrix = {g.vertex_count, table, /*unit_diagonal=*/false};
  out.report.stage = "similarity";
  out.report.workers = 1;
  out.report.op_counters.add(kKernelCounter, 0);
  out.report.wall_seconds = mr::detail::seconds_since_epoch_start() - t0;
  return out;
}

}  // namespace psc
