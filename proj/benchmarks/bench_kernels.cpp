// Microbenchmarks for the hot kernels: Gaussian similarity, the matrix-free
// Laplacian product, one k-means labeling pass, raw engine dispatch, and
// kvstore row traffic.  Run with --benchmark_filter=... to narrow.

#include <benchmark/benchmark.h>

#include "pscluster/dataio.hpp"
#include "pscluster/eigensolver.hpp"
#include "pscluster/kmeans.hpp"
#include "pscluster/kvstore.hpp"
#include "pscluster/mapreduce.hpp"
#include "pscluster/rng.hpp"
#include "pscluster/similarity.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace {

std::vector<double> random_vector(std::int64_t dim, std::mt19937_64& rng) {
  std::vector<double> v(static_cast<std::size_t>(dim));
  for (double& x : v) x = psc::uniform53(rng);
  return v;
}

// Shared fixture: a 258-point blob set with its similarity matrix and
// Laplacian already in a kvstore.
struct LaplacianFixture {
  psc::KvStore store;
  psc::SimilarityMatrix S;
  psc::NormalizedLaplacian L;
  std::vector<double> v;

  explicit LaplacianFixture(int workers) {
    psc::BlobSpec spec;
    spec.blobs = 3;
    spec.points_per_blob = 86;
    psc::LabeledPoints made = psc::generate_blobs(spec, 11);
    psc::mr::Engine engine(workers);
    psc::SimilarityParams params;
    params.sigma = psc::default_sigma(made.points, 1);
    params.sparsify_t = psc::default_sparsify_t(made.points.size());
    S = psc::build_similarity(made.points, params, engine, store, "S").matrix;
    psc::DegreeVector degrees = psc::degree_vector(S, store);
    L = psc::make_laplacian(S, degrees, store);
    std::mt19937_64 rng(5);
    v = random_vector(S.n, rng);
  }
};

void BM_GaussianKernel(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::vector<double> xi = random_vector(state.range(0), rng);
  std::vector<double> xj = random_vector(state.range(0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(psc::gaussian_similarity(xi, xj, 0.8));
  }
}
BENCHMARK(BM_GaussianKernel)->Arg(2)->Arg(16)->Arg(64);

void BM_LaplacianApply(benchmark::State& state) {
  LaplacianFixture fx(static_cast<int>(state.range(0)));
  psc::mr::Engine engine(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(psc::laplacian_apply(fx.L, fx.v, engine));
  }
}
BENCHMARK(BM_LaplacianApply)->Arg(1)->Arg(2)->Arg(4);

void BM_KmeansLabelPass(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<std::vector<double>> rows;
  for (int i = 0; i < 512; ++i) rows.push_back(random_vector(4, rng));
  std::vector<std::vector<double>> centers(rows.begin(), rows.begin() + 8);
  for (auto _ : state) {
    for (const std::vector<double>& row : rows) {
      benchmark::DoNotOptimize(psc::assign_map(row, centers));
    }
  }
  state.SetItemsProcessed(state.iterations() * 512);
}
BENCHMARK(BM_KmeansLabelPass);

void BM_EngineDispatch(benchmark::State& state) {
  psc::mr::Engine engine(static_cast<int>(state.range(0)));
  std::vector<std::int64_t> sink(64, 0);
  for (auto _ : state) {
    engine.run_tasks(64, [&](std::int64_t task) { sink[static_cast<std::size_t>(task)] += task; });
  }
  benchmark::DoNotOptimize(sink);
}
BENCHMARK(BM_EngineDispatch)->Arg(1)->Arg(2)->Arg(4);

void BM_KvstoreRowRoundTrip(benchmark::State& state) {
  psc::KvStore store;
  psc::SparseRow row;
  for (std::int64_t c = 0; c < 32; ++c) row.entries.push_back({c * 3, 1.0 + c});
  std::int64_t i = 0;
  for (auto _ : state) {
    store.put_row({"bench", i % 1024}, row);
    benchmark::DoNotOptimize(store.get_row({"bench", i % 1024}));
    ++i;
  }
}
BENCHMARK(BM_KvstoreRowRoundTrip);

}  // namespace

BENCHMARK_MAIN();
