#include "pscluster/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "pscluster/ari.hpp"
#include "pscluster/eigensolver.hpp"
#include "pscluster/errors.hpp"
#include "pscluster/similarity.hpp"
#include "pscluster/textio.hpp"

namespace psc {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open input file " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("failed reading input file " + path);
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open output file " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing output file " + path);
}

std::string lambda_csv(const std::vector<double>& eigenvalues) {
  std::string out = "index,lambda\n";
  for (std::size_t i = 0; i < eigenvalues.size(); ++i)
    out += std::to_string(i) + ',' + format_double(eigenvalues[i]) + '\n';
  return out;
}

void persist_embedding(KvStore& store, const SpectralEmbedding& embedding) {
  store.drop_table("Z");
  for (std::int64_t i = 0; i < embedding.n; ++i) {
    SparseRow row;
    const auto& z = embedding.z_rows[static_cast<std::size_t>(i)];
    for (std::size_t c = 0; c < z.size(); ++c)
      if (z[c] != 0.0) row.entries.push_back({static_cast<std::int64_t>(c), z[c]});
    store.put_row({"Z", i}, std::move(row));
  }
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, KvStore& store) {
  const double t0 = mr::detail::seconds_since_epoch_start();
  if (config.k < 1) throw DomainError("cluster count must be positive");
  if (config.workers < 1) throw DomainError("worker count must be positive");

  // Load input and validate shape before any stage touches the store.
  PointSet points;
  Graph graph;
  std::int64_t n = 0;
  if (config.mode == PipelineConfig::Mode::Point) {
    points = parse_points(read_file(config.input_path));
    n = points.size();
  } else {
    graph = parse_topology(read_file(config.input_path));
    n = graph.vertex_count;
  }
  if (config.k > n)
    throw DomainError("k=" + std::to_string(config.k) + " exceeds the input size " +
                      std::to_string(n));

  mr::Engine engine(config.workers);
  PipelineResult result;

  // Step 1: similarity matrix into table S, sparsified in point mode.
  SimilarityBuild sim;
  if (config.mode == PipelineConfig::Mode::Point) {
    SimilarityParams params;
    params.sigma = config.sigma > 0 ? config.sigma : default_sigma(points, config.seed);
    if (!config.dense)
      params.sparsify_t = config.knn_t > 0 ? config.knn_t : default_sparsify_t(n);
    sim = build_similarity(points, params, engine, store, "S");
    result.sigma_used = params.sigma;
    result.sparsify_t_used = params.sparsify_t.value_or(0);
  } else {
    sim = graph_similarity(graph, store, "S");
  }

  // Steps 2-4: degrees, normalized Laplacian, k smallest eigenvectors.
  const double eigen_t0 = mr::detail::seconds_since_epoch_start();
  mr::TimingReport eigen_report;
  auto degrees = degree_vector(sim.matrix, store);
  auto laplacian = make_laplacian(sim.matrix, degrees, store);
  auto embedding =
      smallest_k_eigenvectors(laplacian, config.k, engine, config.seed, config.reorthogonalize,
                              &eigen_report, config.lanczos_steps);
  eigen_report.wall_seconds = mr::detail::seconds_since_epoch_start() - eigen_t0;
  persist_embedding(store, embedding);
  result.eigenvalues = embedding.eigenvalues;

  // Steps 5-6: row-normalized embedding through K-means.
  auto km = kmeans(embedding.y_rows, config.k, config.max_iter, config.eps, engine, store,
                   config.seed, config.init);
  result.assignment = std::move(km.assignment);
  result.kmeans_iterations = km.iterations;

  result.reports.push_back(std::move(sim.report));
  result.reports.push_back(std::move(eigen_report));
  result.reports.push_back(std::move(km.report));
  result.total_seconds = mr::detail::seconds_since_epoch_start() - t0;

  if (!config.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    auto in_dir = [&](const char* name) { return (fs::path(config.out_dir) / name).string(); };

    write_file(in_dir("assignments.tsv"), assignments_tsv(result.assignment));
    write_file(in_dir("lambda.csv"), lambda_csv(result.eigenvalues));

    std::string timing = "stage,m,run,wall_seconds\n";
    for (const auto& report : result.reports)
      timing += report.stage + ',' + std::to_string(config.workers) + ",0," +
                format_double(report.wall_seconds) + '\n';
    timing += "total," + std::to_string(config.workers) + ",0," +
              format_double(result.total_seconds) + '\n';
    write_file(in_dir("timing.csv"), timing);

    std::string counters = "stage,m,counter,value\n";
    for (const auto& report : result.reports)
      for (const auto& [name, value] : report.op_counters.values())
        counters += report.stage + ',' + std::to_string(config.workers) + ',' + name + ',' +
                    std::to_string(value) + '\n';
    write_file(in_dir("counters.csv"), counters);

    if (config.mode == PipelineConfig::Mode::Graph && graph.remapped)
      write_file(in_dir("idmap.tsv"), idmap_tsv(graph));
  }
  return result;
}

double SpeedupReport::median_wall(const std::string& stage, int m) const {
  for (const auto& cell : cells)
    if (cell.stage == stage && cell.m == m) return cell.median_wall;
  throw DomainError("no benchmark cell for stage " + stage + ", m=" + std::to_string(m));
}

double SpeedupReport::ratio(const std::string& stage, int m) const {
  return median_wall(stage, 1) / median_wall(stage, m);
}

std::string SpeedupReport::timing_csv() const {
  std::string out = "stage,m,run,wall_seconds\n";
  for (const auto& cell : cells)
    for (std::size_t run = 0; run < cell.run_walls.size(); ++run)
      out += cell.stage + ',' + std::to_string(cell.m) + ',' + std::to_string(run) + ',' +
             format_double(cell.run_walls[run]) + '\n';
  return out;
}

std::string SpeedupReport::counters_csv() const {
  std::string out = "stage,m,counter,value\n";
  for (const auto& cell : cells)
    for (const auto& [name, value] : cell.counters.values())
      out += cell.stage + ',' + std::to_string(cell.m) + ',' + name + ',' +
             std::to_string(value) + '\n';
  return out;
}

std::string SpeedupReport::summary() const {
  std::string out;
  out += "host logical cores: " + std::to_string(host_logical_cores) + "\n";
  out += "task granularity: similarity uses 2 map tasks per worker; "
         "eigenvector row products use 1 task list per worker; "
         "k-means maps fixed point blocks over 2 task lists per worker\n\n";
  std::vector<std::string> stages;
  for (const auto& cell : cells)
    if (std::find(stages.begin(), stages.end(), cell.stage) == stages.end())
      stages.push_back(cell.stage);
  for (const auto& stage : stages) {
    out += stage + ":\n";
    for (const auto& cell : cells) {
      if (cell.stage != stage) continue;
      out += "  m=" + std::to_string(cell.m) + "  median " +
             format_double(cell.median_wall) + "s  speedup " +
             format_double(ratio(stage, cell.m)) + "\n";
    }
  }
  out += "\nspeedup = T(1)/T(m) from per-stage medians of 3 runs; "
         "expect saturation once m reaches the host core count\n";
  return out;
}

SpeedupReport benchmark_speedup(const PipelineConfig& config,
                                const std::vector<int>& worker_counts) {
  if (worker_counts.empty() || std::find(worker_counts.begin(), worker_counts.end(), 1) ==
                                   worker_counts.end())
    throw ConfigError("benchmark worker counts must include m=1");

  const char* stage_names[] = {"similarity", "eigenvectors", "kmeans", "total"};
  SpeedupReport report;
  report.host_logical_cores = static_cast<int>(std::thread::hardware_concurrency());

  for (int m : worker_counts) {
    if (m < 1) throw ConfigError("worker counts must be positive");
    std::vector<std::vector<double>> stage_walls(4);
    mr::Counters stage_counters[4];
    for (int run = 0; run < 3; ++run) {
      PipelineConfig run_config = config;
      run_config.workers = m;
      run_config.out_dir.clear();
      KvStore store;
      auto result = run_pipeline(run_config, store);
      for (std::size_t s = 0; s < 3; ++s) {
        stage_walls[s].push_back(result.reports[s].wall_seconds);
        if (run == 0) stage_counters[s] = result.reports[s].op_counters;
        else if (!(stage_counters[s].values() == result.reports[s].op_counters.values()))
          throw Error("op counters changed between repeat runs in stage " +
                      result.reports[s].stage);
      }
      stage_walls[3].push_back(result.total_seconds);
    }
    for (std::size_t s = 0; s < 4; ++s) {
      SpeedupReport::Cell cell;
      cell.stage = stage_names[s];
      cell.m = m;
      cell.run_walls = stage_walls[s];
      auto sorted = stage_walls[s];
      std::sort(sorted.begin(), sorted.end());
      cell.median_wall = sorted[sorted.size() / 2];
      cell.counters = stage_counters[s];
      report.cells.push_back(std::move(cell));
    }
  }

  // Work conservation: the same arithmetic regardless of worker count.
  for (const auto& cell : report.cells) {
    if (cell.m == 1 || cell.stage == "total") continue;
    for (const auto& reference : report.cells) {
      if (reference.stage != cell.stage || reference.m != 1) continue;
      if (!(reference.counters.values() == cell.counters.values()))
        throw Error("op counters for stage " + cell.stage + " differ between m=1 and m=" +
                    std::to_string(cell.m));
    }
  }

  if (!config.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    write_file((fs::path(config.out_dir) / "timing.csv").string(), report.timing_csv());
    write_file((fs::path(config.out_dir) / "counters.csv").string(), report.counters_csv());
    write_file((fs::path(config.out_dir) / "speedup.txt").string(), report.summary());
  }
  return report;
}

}  // namespace psc
