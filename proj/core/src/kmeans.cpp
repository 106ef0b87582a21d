#include "pscluster/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "pscluster/errors.hpp"
#include "pscluster/rng.hpp"

namespace psc {
namespace {

constexpr const char* kDistanceCounter = "distance_computations";
constexpr const char* kCentersTable = "centers";

// Neumaier-compensated accumulator: the merge result is stable to within
// rounding under any grouping of the same addends.
struct CompensatedSum {
  double sum = 0.0;
  double comp = 0.0;

  void add(double v) {
    double t = sum + v;
    if (std::abs(sum) >= std::abs(v))
      comp += (sum - t) + v;
    else
      comp += (v - t) + sum;
    sum = t;
  }

  double value() const { return sum + comp; }
};

double sq_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double sq = 0.0;
  for (std::size_t c = 0; c < a.size(); ++c) {
    double diff = a[c] - b[c];
    sq += diff * diff;
  }
  return sq;
}

// The point blocks are a fixed decomposition (independent of the worker
// count) so per-cluster sums always merge in the same block order and the
// result is bit-identical for any m.
std::int64_t block_count(std::int64_t n) { return std::min<std::int64_t>(n, 64); }

std::pair<std::int64_t, std::int64_t> block_range(std::int64_t n, std::int64_t blocks,
                                                  std::int64_t b) {
  std::int64_t base = n / blocks;
  std::int64_t extra = n % blocks;
  std::int64_t start = b * base + std::min(b, extra);
  std::int64_t size = base + (b < extra ? 1 : 0);
  return {start, start + size};
}

// Assignment sweep over one block: writes labels and squared distances into
// the per-point slots and returns the block's per-cluster partial sums.
std::map<std::int64_t, ClusterStats> accumulate_block(
    const std::vector<std::vector<double>>& rows, const std::vector<std::vector<double>>& centers,
    std::int64_t begin, std::int64_t end, std::int64_t* labels, double* sq_dists) {
  const std::size_t dim = rows.empty() ? 0 : rows.front().size();
  std::map<std::int64_t, std::pair<std::vector<CompensatedSum>, std::int64_t>> partial;
  for (std::int64_t i = begin; i < end; ++i) {
    const auto& y = rows[static_cast<std::size_t>(i)];
    double best = 0.0;
    std::int64_t cluster = assign_map(y, centers, &best);
    labels[i] = cluster;
    sq_dists[i] = best;
    auto& [sums, num] = partial[cluster];
    if (sums.empty()) sums.resize(dim);
    for (std::size_t c = 0; c < dim; ++c) sums[c].add(y[c]);
    ++num;
  }
  std::map<std::int64_t, ClusterStats> out;
  for (auto& [cluster, acc] : partial) {
    ClusterStats stats;
    stats.sums.reserve(acc.first.size());
    for (const auto& s : acc.first) stats.sums.push_back(s.value());
    stats.num = acc.second;
    out.emplace(cluster, std::move(stats));
  }
  return out;
}

// Empty clusters grab the point farthest from its current center, processed
// in ascending cluster order with each chosen point used once.
void reseed_empty_clusters(const std::vector<std::vector<double>>& rows,
                           const std::vector<std::int64_t>& counts,
                           const std::vector<double>& sq_dists,
                           std::vector<std::vector<double>>& centers) {
  std::vector<char> taken(rows.size(), 0);
  for (std::size_t cluster = 0; cluster < centers.size(); ++cluster) {
    if (counts[cluster] > 0) continue;
    std::size_t farthest = rows.size();
    double best = -1.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (taken[i]) continue;
      if (sq_dists[i] > best) {
        best = sq_dists[i];
        farthest = i;
      }
    }
    if (farthest == rows.size()) continue;  // fewer free points than empty clusters
    taken[farthest] = 1;
    centers[cluster] = rows[farthest];
  }
}

double max_displacement(const std::vector<std::vector<double>>& before,
                        const std::vector<std::vector<double>>& after) {
  double worst = 0.0;
  for (std::size_t c = 0; c < before.size(); ++c)
    worst = std::max(worst, std::sqrt(sq_distance(before[c], after[c])));
  return worst;
}

void check_rows(const std::vector<std::vector<double>>& rows, std::int64_t k) {
  if (k < 1) throw DomainError("cluster count must be positive");
  if (static_cast<std::int64_t>(rows.size()) < k)
    throw DomainError("need at least k points, got " + std::to_string(rows.size()) + " for k=" +
                      std::to_string(k));
  for (const auto& row : rows) {
    if (row.size() != rows.front().size()) throw DomainError("points must share one dimension");
    for (double x : row)
      if (!std::isfinite(x)) throw DomainError("point coordinates must be finite");
  }
}

void write_centers(KvStore& store, const std::vector<std::vector<double>>& centers,
                   std::int64_t iteration) {
  for (std::size_t cluster = 0; cluster < centers.size(); ++cluster) {
    SparseRow row;
    for (std::size_t c = 0; c < centers[cluster].size(); ++c)
      if (centers[cluster][c] != 0.0)
        row.entries.push_back({static_cast<std::int64_t>(c), centers[cluster][c]});
    store.put_row({kCentersTable, static_cast<std::int64_t>(cluster)}, std::move(row));
  }
  SparseRow meta;  // loop-count row one past the clusters
  if (iteration > 0) meta.entries.push_back({0, static_cast<double>(iteration)});
  store.put_row({kCentersTable, static_cast<std::int64_t>(centers.size())}, std::move(meta));
}

std::vector<std::vector<double>> read_centers(const KvStore& store, std::int64_t k,
                                              std::size_t dim) {
  std::vector<std::vector<double>> centers(static_cast<std::size_t>(k),
                                           std::vector<double>(dim, 0.0));
  for (std::int64_t cluster = 0; cluster < k; ++cluster) {
    RowPtr row = store.get_row({kCentersTable, cluster});
    if (!row) throw ReferentialError("centers table is missing cluster " + std::to_string(cluster),
                                     cluster);
    for (std::size_t c = 0; c < dim; ++c)
      centers[static_cast<std::size_t>(cluster)][c] =
          row->value_at(static_cast<std::int64_t>(c));
  }
  return centers;
}

}  // namespace

std::int64_t assign_map(const std::vector<double>& y,
                        const std::vector<std::vector<double>>& centers, double* sq_dist) {
  if (centers.empty()) throw DomainError("need at least one center");
  std::int64_t best_index = 0;
  double best = sq_distance(y, centers[0]);
  for (std::size_t c = 1; c < centers.size(); ++c) {
    double d = sq_distance(y, centers[c]);
    if (d < best) {  // strict: ties keep the earlier center
      best = d;
      best_index = static_cast<std::int64_t>(c);
    }
  }
  if (sq_dist) *sq_dist = best;
  return best_index;
}

std::vector<double> update_reduce(const std::vector<ClusterStats>& contributions) {
  if (contributions.empty()) throw DomainError("update_reduce needs at least one contribution");
  const std::size_t dim = contributions.front().sums.size();
  std::vector<CompensatedSum> sums(dim);
  std::int64_t num = 0;
  for (const auto& stats : contributions) {
    if (stats.sums.size() != dim) throw DomainError("contribution dimensions differ");
    for (std::size_t c = 0; c < dim; ++c) sums[c].add(stats.sums[c]);
    num += stats.num;
  }
  if (num < 1) throw DomainError("cluster has no assigned points");
  std::vector<double> center(dim);
  for (std::size_t c = 0; c < dim; ++c) center[c] = sums[c].value() / static_cast<double>(num);
  return center;
}

std::vector<std::vector<double>> initial_centers(const std::vector<std::vector<double>>& rows,
                                                 std::int64_t k, std::uint64_t seed,
                                                 const KmInit& init) {
  check_rows(rows, k);
  const auto n = static_cast<std::int64_t>(rows.size());
  std::vector<std::vector<double>> centers;
  centers.reserve(static_cast<std::size_t>(k));

  switch (init.mode) {
    case KmInit::Mode::FirstK:
      for (std::int64_t c = 0; c < k; ++c) centers.push_back(rows[static_cast<std::size_t>(c)]);
      break;
    case KmInit::Mode::Indices: {
      if (static_cast<std::int64_t>(init.indices.size()) != k)
        throw DomainError("init indices must list exactly k points");
      std::vector<char> seen(rows.size(), 0);
      for (std::int64_t idx : init.indices) {
        if (idx < 0 || idx >= n) throw DomainError("init index " + std::to_string(idx) + " out of range");
        if (seen[static_cast<std::size_t>(idx)])
          throw DomainError("init index " + std::to_string(idx) + " repeated");
        seen[static_cast<std::size_t>(idx)] = 1;
        centers.push_back(rows[static_cast<std::size_t>(idx)]);
      }
      break;
    }
    case KmInit::Mode::PlusPlus: {
      std::mt19937_64 rng(seed);
      std::vector<char> chosen(rows.size(), 0);
      auto first = static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(n));
      chosen[first] = 1;
      centers.push_back(rows[first]);
      std::vector<double> dist2(rows.size());
      for (std::size_t i = 0; i < rows.size(); ++i) dist2[i] = sq_distance(rows[i], centers[0]);
      while (static_cast<std::int64_t>(centers.size()) < k) {
        double total = 0.0;
        for (double d : dist2) total += d;
        std::size_t pick = rows.size();
        if (total > 0.0) {
          double r = uniform53(rng) * total;
          double cumulative = 0.0;
          for (std::size_t i = 0; i < dist2.size(); ++i) {
            cumulative += dist2[i];
            if (r < cumulative) {
              pick = i;
              break;
            }
          }
          if (pick == rows.size()) pick = dist2.size() - 1;  // r landed on the rounding edge
        } else {
          // All remaining mass is zero (duplicate-heavy data): take the first
          // unchosen point.
          for (std::size_t i = 0; i < rows.size(); ++i)
            if (!chosen[i]) {
              pick = i;
              break;
            }
        }
        chosen[pick] = 1;
        centers.push_back(rows[pick]);
        for (std::size_t i = 0; i < rows.size(); ++i)
          dist2[i] = std::min(dist2[i], sq_distance(rows[i], centers.back()));
      }
      break;
    }
  }
  return centers;
}

KmResult kmeans(const std::vector<std::vector<double>>& rows, std::int64_t k,
                std::int64_t max_iter, double eps, mr::Engine& engine, KvStore& store,
                std::uint64_t seed, const KmInit& init) {
  check_rows(rows, k);
  if (max_iter < 1) throw DomainError("max_iter must be positive");
  const double t0 = mr::detail::seconds_since_epoch_start();
  const auto n = static_cast<std::int64_t>(rows.size());
  const std::size_t dim = rows.front().size();
  const std::int64_t blocks = block_count(n);

  KmResult out;
  out.report.stage = "kmeans";
  out.report.workers = engine.workers();

  auto centers = initial_centers(rows, k, seed, init);
  store.drop_table(kCentersTable);
  write_centers(store, centers, 0);

  std::vector<std::int64_t> labels(static_cast<std::size_t>(n), 0);
  std::vector<double> sq_dists(static_cast<std::size_t>(n), 0.0);

  std::vector<std::int64_t> block_keys(static_cast<std::size_t>(blocks));
  for (std::int64_t b = 0; b < blocks; ++b) block_keys[static_cast<std::size_t>(b)] = b;

  for (std::int64_t iteration = 1; iteration <= max_iter; ++iteration) {
    mr::Job<ClusterStats> job;
    job.stage = "kmeans";
    job.input_keys = block_keys;
    job.counter_names = {kDistanceCounter};
    job.map_fn = [&](std::int64_t block, mr::Emitter<ClusterStats>& emitter) {
      auto snapshot = read_centers(store, k, dim);  // the shared center file
      auto [begin, end] = block_range(n, blocks, block);
      auto partials = accumulate_block(rows, snapshot, begin, end, labels.data(), sq_dists.data());
      emitter.counters().add(kDistanceCounter, (end - begin) * k);
      for (auto& [cluster, stats] : partials) emitter.emit(cluster, std::move(stats));
    };
    job.reduce_fn = [&](std::int64_t, const std::vector<ClusterStats>& contributions) {
      ClusterStats merged;
      merged.sums = update_reduce(contributions);
      for (const auto& stats : contributions) merged.num += stats.num;
      return merged;
    };
    auto job_out = mr::run_job(engine, job);
    out.report.op_counters.merge(job_out.report.op_counters);
    for (auto& c : job_out.report.task_counters)
      out.report.task_counters.push_back(std::move(c));

    CompensatedSum wcss;
    for (double d : sq_dists) wcss.add(d);
    out.wcss_history.push_back(wcss.value());

    std::vector<std::vector<double>> next = centers;
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (auto& [cluster, stats] : job_out.reduced) {
      next[static_cast<std::size_t>(cluster)] = stats.sums;
      counts[static_cast<std::size_t>(cluster)] = stats.num;
    }
    reseed_empty_clusters(rows, counts, sq_dists, next);

    double moved = max_displacement(centers, next);
    centers = std::move(next);
    write_centers(store, centers, iteration);
    out.iterations = iteration;
    if (moved < eps) break;
  }

  out.assignment.labels = std::move(labels);
  out.assignment.k = k;
  out.centers = std::move(centers);
  out.report.wall_seconds = mr::detail::seconds_since_epoch_start() - t0;
  return out;
}

KmResult kmeans_oracle(const std::vector<std::vector<double>>& rows, std::int64_t k,
                       std::int64_t max_iter, double eps,
                       const std::vector<std::vector<double>>& init) {
  check_rows(rows, k);
  if (max_iter < 1) throw DomainError("max_iter must be positive");
  if (static_cast<std::int64_t>(init.size()) != k)
    throw DomainError("oracle needs exactly k initial centers");
  const auto n = static_cast<std::int64_t>(rows.size());
  const std::int64_t blocks = block_count(n);

  KmResult out;
  out.report.stage = "kmeans";
  out.report.workers = 1;

  auto centers = init;
  std::vector<std::int64_t> labels(static_cast<std::size_t>(n), 0);
  std::vector<double> sq_dists(static_cast<std::size_t>(n), 0.0);

  for (std::int64_t iteration = 1; iteration <= max_iter; ++iteration) {
    // Same fixed block schedule as the engine path: per-block partials merged
    // in block order, so the two implementations agree bit for bit.
    std::map<std::int64_t, std::vector<ClusterStats>> grouped;
    for (std::int64_t b = 0; b < blocks; ++b) {
      auto [begin, end] = block_range(n, blocks, b);
      auto partials = accumulate_block(rows, centers, begin, end, labels.data(), sq_dists.data());
      for (auto& [cluster, stats] : partials) grouped[cluster].push_back(std::move(stats));
    }
    out.report.op_counters.add(kDistanceCounter, n * k);

    CompensatedSum wcss;
    for (double d : sq_dists) wcss.add(d);
    out.wcss_history.push_back(wcss.value());

    std::vector<std::vector<double>> next = centers;
    std::vector<std::int64_t> counts(static_cast<std::size_t>(k), 0);
    for (auto& [cluster, contributions] : grouped) {
      next[static_cast<std::size_t>(cluster)] = update_reduce(contributions);
      for (const auto& stats : contributions)
        counts[static_cast<std::size_t>(cluster)] += stats.num;
    }
    reseed_empty_clusters(rows, counts, sq_dists, next);

    double moved = max_displacement(centers, next);
    centers = std::move(next);
    out.iterations = iteration;
    if (moved < eps) break;
  }

  out.assignment.labels = std::move(labels);
  out.assignment.k = k;
  out.centers = std::move(centers);
  return out;
}

}  // namespace psc
