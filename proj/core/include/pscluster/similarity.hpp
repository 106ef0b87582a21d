#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pscluster/dataio.hpp"
#include "pscluster/kvstore.hpp"
#include "pscluster/mapreduce.hpp"

namespace psc {

struct SimilarityParams {
  double sigma = 1.0;                      // Gaussian bandwidth, > 0
  std::optional<std::int64_t> sparsify_t;  // keep t largest off-diagonal per row; nullopt = dense
};

// Handle to a sparse symmetric matrix whose rows live in a kvstore table.
struct SimilarityMatrix {
  std::int64_t n = 0;
  std::string table;
  bool unit_diagonal = false;  // point mode stores S_ii = 1, graph mode stores no diagonal
};

// exp(-||xi - xj||^2 / (2 sigma^2)), in (0, 1].
double gaussian_similarity(const std::vector<double>& xi, const std::vector<double>& xj,
                           double sigma);

// The load-balancing pairing, 1-based like the row keys it mimics: row i is
// processed together with row n-i+1, so the short upper-triangle tail of a
// late row rides with the long tail of an early one.  The middle row of an
// odd n pairs with itself and is returned once.
std::vector<std::int64_t> pair_indices(std::int64_t i, std::int64_t n);

std::int64_t default_sparsify_t(std::int64_t n);  // ceil(log2 n) + 1

// Median pairwise distance over a seeded 1000-pair sample; 1.0 when there are
// no pairs to sample.
double default_sigma(const PointSet& points, std::uint64_t seed);

struct SimilarityBuild {
  SimilarityMatrix matrix;
  mr::TimingReport report;
};

// Builds S into `table`: map tasks own row pairs, compute each upper-triangle
// kernel once, and mirror it into the partner row's cells.  With sparsify_t
// set, each row then keeps its t largest off-diagonal entries and the result
// is re-symmetrized by union (an entry survives if either endpoint kept it).
SimilarityBuild build_similarity(const PointSet& points, const SimilarityParams& params,
                                 mr::Engine& engine, KvStore& store, const std::string& table);

// Graph mode: edge weights are the similarity, zero diagonal.
SimilarityBuild graph_similarity(const Graph& g, KvStore& store, const std::string& table);

}  // namespace psc
