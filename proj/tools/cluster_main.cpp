// Command-line front end: `cluster run` for one clustering pass, `cluster
// bench` for the worker-count speedup sweep, `cluster gen` for synthetic
// inputs with a ground-truth sidecar.

#include "CLI11.hpp"

#include "pscluster/dataio.hpp"
#include "pscluster/errors.hpp"
#include "pscluster/kvstore.hpp"
#include "pscluster/pipeline.hpp"
#include "pscluster/textio.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw psc::IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw psc::IoError("short write to '" + path + "'");
}

std::string truth_tsv(const std::vector<std::int64_t>& truth) {
  std::string text;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    text += std::to_string(i);
    text += '\t';
    text += std::to_string(truth[i]);
    text += '\n';
  }
  return text;
}

struct RunFlags {
  std::string input;
  std::string mode = "point";
  std::int64_t k = 2;
  double sigma = 0.0;
  std::int64_t knn_t = 0;
  bool dense = false;
  double eps = 1e-9;
  std::int64_t max_iter = 100;
  std::int64_t lanczos_steps = 0;
  bool no_reorth = false;
  int workers = 1;
  std::uint64_t seed = 1;
  std::string out_dir;
  std::string init = "kmeans++";
  std::vector<std::int64_t> init_indices;
};

psc::PipelineConfig to_config(const RunFlags& f) {
  psc::PipelineConfig config;
  config.input_path = f.input;
  config.mode = f.mode == "graph" ? psc::PipelineConfig::Mode::Graph
                                  : psc::PipelineConfig::Mode::Point;
  config.k = f.k;
  config.sigma = f.sigma;
  config.knn_t = f.knn_t;
  config.dense = f.dense;
  config.eps = f.eps;
  config.max_iter = f.max_iter;
  config.lanczos_steps = f.lanczos_steps;
  config.reorthogonalize = !f.no_reorth;
  config.workers = f.workers;
  config.seed = f.seed;
  config.out_dir = f.out_dir;
  if (!f.init_indices.empty()) {
    config.init.mode = psc::KmInit::Mode::Indices;
    config.init.indices = f.init_indices;
  } else if (f.init == "first-k") {
    config.init.mode = psc::KmInit::Mode::FirstK;
  } else {
    config.init.mode = psc::KmInit::Mode::PlusPlus;
  }
  return config;
}

void add_run_flags(CLI::App* cmd, RunFlags& f, bool with_tuning) {
  cmd->add_option("--input", f.input, "points CSV or graph topology file")->required();
  cmd->add_option("--mode", f.mode, "input kind: point or graph")
      ->check(CLI::IsMember({"point", "graph"}));
  cmd->add_option("--k", f.k, "number of clusters")->required();
  cmd->add_option("--sigma", f.sigma, "Gaussian bandwidth; 0 picks the median-distance heuristic");
  cmd->add_option("--knn-t", f.knn_t, "neighbors kept per row; 0 picks ceil(log2 n)+1");
  cmd->add_flag("--dense", f.dense, "keep the dense similarity matrix (skip sparsification)");
  cmd->add_option("--seed", f.seed, "seed for sigma sampling, Lanczos start, k-means++");
  cmd->add_option("--out", f.out_dir, "directory for assignments.tsv, lambda.csv, timing.csv, counters.csv");
  if (with_tuning) {
    cmd->add_option("--workers", f.workers, "map-reduce worker threads")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--eps", f.eps, "k-means center-displacement stop threshold");
    cmd->add_option("--max-iter", f.max_iter, "k-means iteration cap");
    cmd->add_option("--lanczos-steps", f.lanczos_steps, "Lanczos step budget; 0 picks min(n, max(2k+20, 40))");
    cmd->add_flag("--no-reorth", f.no_reorth, "skip Lanczos reorthogonalization (loses orthogonality, for demonstration)");
    cmd->add_option("--init", f.init, "k-means seeding: kmeans++ or first-k")
        ->check(CLI::IsMember({"kmeans++", "first-k"}));
    cmd->add_option("--init-indices", f.init_indices, "explicit k-means seed point indices")
        ->delimiter(',');
  }
  cmd->set_config("--config", "", "key=value defaults; explicit flags win");
}

int do_run(const RunFlags& f) {
  psc::PipelineConfig config = to_config(f);
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);
  psc::KvStore store;
  psc::PipelineResult result = psc::run_pipeline(config, store);

  std::cout << "clustered " << result.assignment.labels.size() << " "
            << (config.mode == psc::PipelineConfig::Mode::Graph ? "vertices" : "points")
            << " into " << config.k << " clusters with " << config.workers
            << (config.workers == 1 ? " worker\n" : " workers\n");
  if (config.mode == psc::PipelineConfig::Mode::Point) {
    std::cout << "sigma " << psc::format_double(result.sigma_used);
    if (result.sparsify_t_used > 0) std::cout << ", t " << result.sparsify_t_used;
    std::cout << "\n";
  }
  std::cout << "eigenvalues:";
  for (double lambda : result.eigenvalues) std::cout << " " << psc::format_double(lambda);
  std::cout << "\n";
  std::cout << "k-means iterations: " << result.kmeans_iterations << "\n";
  for (const psc::mr::TimingReport& report : result.reports) {
    std::cout << report.stage << ": " << psc::format_double(report.wall_seconds) << " s\n";
  }
  std::cout << "total: " << psc::format_double(result.total_seconds) << " s\n";
  if (!config.out_dir.empty()) std::cout << "wrote " << config.out_dir << "\n";
  return 0;
}

int do_bench(const RunFlags& f, const std::vector<int>& workers) {
  psc::PipelineConfig config = to_config(f);
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);
  psc::SpeedupReport report = psc::benchmark_speedup(config, workers);
  std::cout << report.summary();
  if (!config.out_dir.empty()) std::cout << "wrote " << config.out_dir << "\n";
  return 0;
}

struct GenFlags {
  std::int64_t blobs = 3;
  std::int64_t points = 30;
  double sep = 10.0;
  std::int64_t dim = 2;
  double blob_sigma = 1.0;
  std::int64_t cliques = 3;
  std::int64_t size = 4;
  double weight = 1.0;
  std::uint64_t seed = 7;
  std::string out;
};

int do_gen(const GenFlags& f, bool graph_mode) {
  std::string truth_path = f.out + ".truth";
  if (graph_mode) {
    psc::CliqueSpec spec;
    spec.cliques = f.cliques;
    spec.clique_size = f.size;
    spec.weight = f.weight;
    psc::LabeledGraph made = psc::generate_cliques(spec);
    write_text_file(f.out, psc::serialize_topology(made.graph));
    write_text_file(truth_path, truth_tsv(made.truth));
    std::cout << "wrote " << made.graph.vertex_count << " vertices, "
              << made.graph.edges.size() << " edges to " << f.out << "\n";
  } else {
    psc::BlobSpec spec;
    spec.blobs = f.blobs;
    spec.points_per_blob = f.points;
    spec.separation = f.sep;
    spec.dim = f.dim;
    spec.blob_sigma = f.blob_sigma;
    psc::LabeledPoints made = psc::generate_blobs(spec, f.seed);
    write_text_file(f.out, psc::serialize_points(made.points));
    write_text_file(truth_path, truth_tsv(made.truth));
    std::cout << "wrote " << made.points.size() << " points of dim "
              << made.points.dim() << " to " << f.out << "\n";
  }
  std::cout << "truth labels in " << truth_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parallel spectral clustering on a local map-reduce engine"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "cluster one input file");
  add_run_flags(run_cmd, run_flags, /*with_tuning=*/true);

  RunFlags bench_flags;
  std::vector<int> bench_workers = {1, 2, 4, 8};
  CLI::App* bench_cmd = app.add_subcommand("bench", "time every stage across worker counts");
  add_run_flags(bench_cmd, bench_flags, /*with_tuning=*/false);
  bench_cmd->add_option("--workers", bench_workers, "worker counts to sweep; must include 1")
      ->delimiter(',');

  GenFlags gen_flags;
  CLI::App* gen_cmd = app.add_subcommand("gen", "write a synthetic input plus .truth sidecar");
  CLI::Option* blobs_opt = gen_cmd->add_option("--blobs", gen_flags.blobs, "Gaussian blob count (point mode)");
  gen_cmd->add_option("--points", gen_flags.points, "points per blob");
  gen_cmd->add_option("--sep", gen_flags.sep, "distance between blob centers");
  gen_cmd->add_option("--dim", gen_flags.dim, "point dimensionality");
  gen_cmd->add_option("--blob-sigma", gen_flags.blob_sigma, "noise around each blob center");
  CLI::Option* cliques_opt = gen_cmd->add_option("--cliques", gen_flags.cliques, "clique count (graph mode)");
  gen_cmd->add_option("--size", gen_flags.size, "vertices per clique");
  gen_cmd->add_option("--weight", gen_flags.weight, "edge weight inside each clique");
  gen_cmd->add_option("--seed", gen_flags.seed, "blob noise seed");
  gen_cmd->add_option("--out", gen_flags.out, "output file path")->required();
  cliques_opt->excludes(blobs_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return do_run(run_flags);
    if (bench_cmd->parsed()) return do_bench(bench_flags, bench_workers);
    if (gen_cmd->parsed()) return do_gen(gen_flags, cliques_opt->count() > 0);
  } catch (const psc::Error& e) {
    std::cerr << "cluster: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "cluster: internal error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
