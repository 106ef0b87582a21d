#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pscluster/dataio.hpp"
#include "pscluster/kmeans.hpp"
#include "pscluster/kvstore.hpp"
#include "pscluster/mapreduce.hpp"

namespace psc {

struct PipelineConfig {
  enum class Mode { Point, Graph };

  std::string input_path;
  Mode mode = Mode::Point;
  std::int64_t k = 2;
  double sigma = 0.0;        // 0 = median-distance heuristic
  std::int64_t knn_t = 0;    // 0 = ceil(log2 n) + 1
  bool dense = false;        // skip sparsification entirely
  double eps = 1e-9;
  std::int64_t max_iter = 100;
  std::int64_t lanczos_steps = 0;  // 0 = min(n, max(2k+20, 40))
  bool reorthogonalize = true;
  int workers = 1;
  std::uint64_t seed = 1;
  std::string out_dir;  // empty = compute only, write no files
  KmInit init;
};

struct PipelineResult {
  ClusterAssignment assignment;
  std::vector<double> eigenvalues;            // k smallest, ascending
  std::vector<mr::TimingReport> reports;      // similarity, eigenvectors, kmeans
  double total_seconds = 0.0;
  std::int64_t kmeans_iterations = 0;
  double sigma_used = 0.0;                    // point mode only
  std::int64_t sparsify_t_used = 0;           // 0 when dense or graph mode
};

// The full six-step run: similarity (+ sparsify) into table `S`, degrees,
// normalized Laplacian, k smallest eigenvectors into table `Z`, row
// normalization, K-means over the embedded rows.  With out_dir set, writes
// assignments.tsv, lambda.csv, timing.csv, counters.csv (and idmap.tsv when
// a graph input needed remapping).
PipelineResult run_pipeline(const PipelineConfig& config, KvStore& store);

struct SpeedupReport {
  struct Cell {
    std::string stage;
    int m = 0;
    std::vector<double> run_walls;
    double median_wall = 0.0;
    mr::Counters counters;
  };
  std::vector<Cell> cells;  // stages x worker counts, m=1 first per stage
  int host_logical_cores = 0;

  double median_wall(const std::string& stage, int m) const;
  // T(1) / T(m) from recorded medians; 1.0 for the m=1 cell by construction.
  double ratio(const std::string& stage, int m) const;

  std::string timing_csv() const;    // stage,m,run,wall_seconds
  std::string counters_csv() const;  // stage,m,counter,value
  std::string summary() const;       // human-readable trend report
};

// Runs the pipeline 3 times per worker count on one input/seed and records
// per-stage wall medians plus op counters; counters must agree across all
// runs and worker counts (parallelism may not change the arithmetic).  With
// config.out_dir set, writes timing.csv, counters.csv, and speedup.txt.
SpeedupReport benchmark_speedup(const PipelineConfig& config, const std::vector<int>& worker_counts);

}  // namespace psc
