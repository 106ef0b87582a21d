#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "pscluster/ari.hpp"
#include "pscluster/dataio.hpp"
#include "pscluster/errors.hpp"
#include "pscluster/pipeline.hpp"
#include "pscluster/similarity.hpp"

namespace {

using namespace psc;

std::string temp_path(const char* stem) {
  return (std::filesystem::temp_directory_path() / stem).string();
}

void spill(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  REQUIRE(out.good());
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// A compact but honest end-to-end input: three clouds far enough apart that
// the generating partition is the only reasonable 3-clustering.
std::string write_blob_file(const char* stem, std::vector<std::int64_t>* truth,
                            std::int64_t per_blob = 20, std::uint64_t seed = 7) {
  BlobSpec spec;
  spec.blobs = 3;
  spec.points_per_blob = per_blob;
  spec.separation = 14.0;
  spec.dim = 2;
  spec.blob_sigma = 1.0;
  auto labeled = generate_blobs(spec, seed);
  if (truth) *truth = labeled.truth;
  const std::string path = temp_path(stem);
  spill(path, serialize_points(labeled.points));
  return path;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("well separated blobs are recovered exactly in point mode") {
  std::vector<std::int64_t> truth;
  const std::string input = write_blob_file("pscluster_pipe_blobs.csv", &truth);

  PipelineConfig config;
  config.input_path = input;
  config.k = 3;
  config.seed = 7;
  KvStore store;
  auto result = run_pipeline(config, store);

  CHECK(ari(result.assignment.labels, truth) == 1.0);
  CHECK(result.assignment.k == 3);
  CHECK(result.eigenvalues.size() == 3);
  CHECK(result.eigenvalues[0] <= result.eigenvalues[1]);
  CHECK(result.eigenvalues[1] <= result.eigenvalues[2]);
  CHECK(result.eigenvalues[0] < 1e-6);  // each blob stays internally connected
  CHECK(result.sigma_used > 0.0);
  CHECK(result.sparsify_t_used == default_sparsify_t(60));
  CHECK(result.kmeans_iterations >= 1);
  CHECK(result.total_seconds > 0.0);

  // Stage reports arrive in pipeline order with their op counters attached.
  REQUIRE(result.reports.size() == 3);
  CHECK(result.reports[0].stage == "similarity");
  CHECK(result.reports[1].stage == "eigenvectors");
  CHECK(result.reports[2].stage == "kmeans");
  CHECK(result.reports[0].op_counters.get("kernel_evaluations") == 60 * 61 / 2);
  CHECK(result.reports[1].op_counters.get("matvec_row_products") > 0);
  CHECK(result.reports[2].op_counters.get("distance_computations") > 0);

  // The embedding is persisted one row per point.
  CHECK(store.row_count("Z") == 60);
  CHECK(store.row_count("S") == 60);
  std::remove(input.c_str());
}

TEST_CASE("dense mode skips sparsification") {
  std::vector<std::int64_t> truth;
  const std::string input = write_blob_file("pscluster_pipe_dense.csv", &truth, 10);

  PipelineConfig config;
  config.input_path = input;
  config.k = 3;
  config.dense = true;
  config.seed = 3;
  KvStore store;
  auto result = run_pipeline(config, store);
  CHECK(result.sparsify_t_used == 0);
  CHECK(ari(result.assignment.labels, truth) == 1.0);
  std::remove(input.c_str());
}

TEST_CASE("disjoint cliques in graph mode give one null eigenvalue per component") {
  CliqueSpec spec;
  spec.cliques = 3;
  spec.clique_size = 5;
  spec.weight = 2.0;
  auto labeled = generate_cliques(spec);
  const std::string input = temp_path("pscluster_pipe_cliques.txt");
  spill(input, serialize_topology(labeled.graph));

  PipelineConfig config;
  config.input_path = input;
  config.mode = PipelineConfig::Mode::Graph;
  config.k = 3;
  config.seed = 11;
  KvStore store;
  auto result = run_pipeline(config, store);

  for (double lambda : result.eigenvalues) CHECK(std::abs(lambda) < 1e-8);
  CHECK(ari(result.assignment.labels, labeled.truth) == 1.0);
  CHECK(result.sigma_used == 0.0);
  CHECK(result.sparsify_t_used == 0);
  // Graph mode evaluates no kernels; adjacency weights are copied as-is.
  CHECK(result.reports[0].op_counters.get("kernel_evaluations") == 0);
  std::remove(input.c_str());
}

TEST_CASE("results are identical for every worker count") {
  std::vector<std::int64_t> truth;
  const std::string input = write_blob_file("pscluster_pipe_workers.csv", &truth);

  std::vector<std::vector<std::int64_t>> labels;
  std::vector<std::vector<double>> eigenvalues;
  for (int m : {1, 2, 4, 8}) {
    PipelineConfig config;
    config.input_path = input;
    config.k = 3;
    config.seed = 7;
    config.workers = m;
    KvStore store;
    auto result = run_pipeline(config, store);
    labels.push_back(result.assignment.labels);
    eigenvalues.push_back(result.eigenvalues);
  }
  for (std::size_t i = 1; i < labels.size(); ++i) {
    CHECK(labels[i] == labels[0]);
    CHECK(eigenvalues[i] == eigenvalues[0]);  // bitwise, not approximate
  }
  std::remove(input.c_str());
}

TEST_CASE("out_dir receives assignments, eigenvalues, timing, and counters") {
  // Non-dense vertex ids force a remap, so the id-map sidecar appears too.
  const std::string input = temp_path("pscluster_pipe_remap.txt");
  spill(input,
        "v 10 1\nv 20 1\nv 30 1\nv 40 1\n"
        "e 10 20 2\ne 30 40 2\n");
  const std::string out_dir = temp_path("pscluster_pipe_out");
  std::filesystem::remove_all(out_dir);

  PipelineConfig config;
  config.input_path = input;
  config.mode = PipelineConfig::Mode::Graph;
  config.k = 2;
  config.workers = 2;
  config.seed = 5;
  config.out_dir = out_dir;
  KvStore store;
  auto result = run_pipeline(config, store);

  namespace fs = std::filesystem;
  CHECK(slurp(out_dir + "/assignments.tsv") == assignments_tsv(result.assignment));

  const std::string lambda = slurp(out_dir + "/lambda.csv");
  CHECK(lambda.rfind("index,lambda\n", 0) == 0);
  CHECK(std::count(lambda.begin(), lambda.end(), '\n') == 3);  // header + k rows

  const std::string timing = slurp(out_dir + "/timing.csv");
  CHECK(timing.rfind("stage,m,run,wall_seconds\n", 0) == 0);
  CHECK(timing.find("similarity,2,0,") != std::string::npos);
  CHECK(timing.find("eigenvectors,2,0,") != std::string::npos);
  CHECK(timing.find("kmeans,2,0,") != std::string::npos);
  CHECK(timing.find("total,2,0,") != std::string::npos);

  const std::string counters = slurp(out_dir + "/counters.csv");
  CHECK(counters.rfind("stage,m,counter,value\n", 0) == 0);
  CHECK(counters.find("similarity,2,kernel_evaluations,0\n") != std::string::npos);
  CHECK(counters.find("eigenvectors,2,matvec_row_products,") != std::string::npos);
  CHECK(counters.find("kmeans,2,distance_computations,") != std::string::npos);

  CHECK(fs::exists(out_dir + "/idmap.tsv"));
  CHECK(slurp(out_dir + "/idmap.tsv") == "10\t0\n20\t1\n30\t2\n40\t3\n");

  std::remove(input.c_str());
  fs::remove_all(out_dir);
}

TEST_CASE("degenerate configurations are rejected up front") {
  const std::string input = temp_path("pscluster_pipe_tiny.csv");
  spill(input, "0,0\n1,0\n0,1\n");

  PipelineConfig config;
  config.input_path = input;
  config.k = 2;
  KvStore store;

  PipelineConfig bad = config;
  bad.k = 0;
  CHECK_THROWS_AS(run_pipeline(bad, store), DomainError);
  bad = config;
  bad.workers = 0;
  CHECK_THROWS_AS(run_pipeline(bad, store), DomainError);
  bad = config;
  bad.k = 4;  // more clusters than points
  CHECK_THROWS_AS(run_pipeline(bad, store), DomainError);
  bad = config;
  bad.input_path = temp_path("pscluster_pipe_missing.csv");
  CHECK_THROWS_AS(run_pipeline(bad, store), IoError);

  std::remove(input.c_str());
}

TEST_CASE("speedup benchmark needs a serial baseline") {
  PipelineConfig config;
  config.input_path = temp_path("pscluster_pipe_unused.csv");
  CHECK_THROWS_AS(benchmark_speedup(config, {}), ConfigError);
  CHECK_THROWS_AS(benchmark_speedup(config, {2, 4}), ConfigError);
}

TEST_CASE("speedup benchmark records per stage medians and conserved counters") {
  std::vector<std::int64_t> truth;
  const std::string input = write_blob_file("pscluster_pipe_bench.csv", &truth, 10);
  const std::string out_dir = temp_path("pscluster_pipe_bench_out");
  std::filesystem::remove_all(out_dir);

  PipelineConfig config;
  config.input_path = input;
  config.k = 3;
  config.seed = 7;
  config.out_dir = out_dir;
  auto report = benchmark_speedup(config, {1, 2});

  // 4 stages (similarity, eigenvectors, kmeans, total) x 2 worker counts.
  CHECK(report.cells.size() == 8);
  CHECK(report.ratio("similarity", 1) == 1.0);
  CHECK(report.median_wall("total", 2) > 0.0);
  CHECK_THROWS_AS(report.median_wall("nonsense", 1), DomainError);
  for (const auto& cell : report.cells) {
    CHECK(cell.run_walls.size() == 3);
    CHECK(cell.median_wall > 0.0);
  }
  CHECK(report.host_logical_cores >= 1);

  namespace fs = std::filesystem;
  CHECK(fs::exists(out_dir + "/timing.csv"));
  CHECK(fs::exists(out_dir + "/counters.csv"));
  const std::string summary = slurp(out_dir + "/speedup.txt");
  CHECK(summary.find("host logical cores") != std::string::npos);
  CHECK(summary.find("similarity:") != std::string::npos);

  std::remove(input.c_str());
  fs::remove_all(out_dir);
}

}  // TEST_SUITE
