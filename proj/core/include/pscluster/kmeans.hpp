#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pscluster/dataio.hpp"
#include "pscluster/kvstore.hpp"
#include "pscluster/mapreduce.hpp"

namespace psc {

// Per-cluster accumulator shuttled through the shuffle: coordinate sums and
// the count of points folded into them.
struct ClusterStats {
  std::vector<double> sums;
  std::int64_t num = 0;
};

struct KmInit {
  enum class Mode { PlusPlus, FirstK, Indices };
  Mode mode = Mode::PlusPlus;
  std::vector<std::int64_t> indices;  // used by Mode::Indices, exactly k entries
};

struct KmResult {
  ClusterAssignment assignment;
  std::vector<std::vector<double>> centers;
  std::int64_t iterations = 0;
  std::vector<double> wcss_history;  // objective after each assignment phase
  mr::TimingReport report;
};

// Closest center by squared Euclidean distance, ties to the lowest index
// (strict < comparison keeps the earlier center).  Optionally reports the
// winning squared distance.
std::int64_t assign_map(const std::vector<double>& y,
                        const std::vector<std::vector<double>>& centers,
                        double* sq_dist = nullptr);

// Mean of the contributions: componentwise compensated sum divided by the
// total count.  Order-insensitive within rounding.
std::vector<double> update_reduce(const std::vector<ClusterStats>& contributions);

// Deterministic center seeding for a fixed seed; k-means++ by default.
std::vector<std::vector<double>> initial_centers(const std::vector<std::vector<double>>& rows,
                                                 std::int64_t k, std::uint64_t seed,
                                                 const KmInit& init);

// Lloyd iterations as alternating engine jobs: an assignment map over fixed
// point blocks (reading the shared `centers` table) and a per-cluster mean
// reduce; the driver rewrites the centers table between phases.  Stops when
// the largest center displacement drops below eps or after max_iter rounds.
KmResult kmeans(const std::vector<std::vector<double>>& rows, std::int64_t k,
                std::int64_t max_iter, double eps, mr::Engine& engine, KvStore& store,
                std::uint64_t seed, const KmInit& init = {});

// Single-threaded Lloyd with the same tie, reseed, and summation-schedule
// rules, bypassing engine and store entirely; equivalence reference.
KmResult kmeans_oracle(const std::vector<std::vector<double>>& rows, std::int64_t k,
                       std::int64_t max_iter, double eps,
                       const std::vector<std::vector<double>>& init);

}  // namespace psc
