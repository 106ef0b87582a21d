#include "pscluster/eigensolver.hpp"

#include <algorithm>
#include <cmath>

#include "pscluster/errors.hpp"
#include "pscluster/rng.hpp"

namespace psc {
namespace {

constexpr const char* kMatvecCounter = "matvec_row_products";
constexpr double kBreakdownBeta = 1e-12;
constexpr double kResidualTolerance = 1e-6;

std::vector<std::int64_t> iota_keys(std::int64_t count) {
  std::vector<std::int64_t> keys(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) keys[static_cast<std::size_t>(i)] = i;
  return keys;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

double norm(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

void axpy(double scale, const std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += scale * x[i];
}

// Row formula shared by the parallel and the sequential paths; summation
// order is the stored column order, so results don't depend on the worker
// count.
double apply_row(const NormalizedLaplacian& L, std::int64_t i, const std::vector<double>& v) {
  RowPtr row = L.store->get_row({L.table, i});
  double sum = 0.0;
  if (row)
    for (const auto& e : row->entries)
      sum += e.value * L.inv_sqrt_degree[static_cast<std::size_t>(e.column)] *
             v[static_cast<std::size_t>(e.column)];
  auto idx = static_cast<std::size_t>(i);
  return v[idx] - L.inv_sqrt_degree[idx] * sum;
}

// Single-threaded apply used for residual verification, deliberately outside
// the op counters: checks aren't pipeline work.
std::vector<double> apply_sequential(const NormalizedLaplacian& L, const std::vector<double>& v) {
  std::vector<double> y(v.size());
  for (std::int64_t i = 0; i < L.n; ++i) y[static_cast<std::size_t>(i)] = apply_row(L, i, v);
  return y;
}

}  // namespace

DegreeVector degree_vector(const SimilarityMatrix& S, const KvStore& store) {
  DegreeVector out;
  out.d.assign(static_cast<std::size_t>(S.n), 0.0);
  for (const auto& [row, ptr] : store.scan(S.table, 0, S.n)) {
    double sum = 0.0;
    for (const auto& e : ptr->entries) sum += e.value;
    out.d[static_cast<std::size_t>(row)] = sum;
  }
  return out;
}

NormalizedLaplacian make_laplacian(const SimilarityMatrix& S, const DegreeVector& degrees,
                                   const KvStore& store) {
  if (static_cast<std::int64_t>(degrees.d.size()) != S.n)
    throw DomainError("degree vector length does not match the matrix dimension");
  NormalizedLaplacian L;
  L.store = &store;
  L.table = S.table;
  L.n = S.n;
  L.inv_sqrt_degree.reserve(degrees.d.size());
  for (std::size_t i = 0; i < degrees.d.size(); ++i) {
    if (!(degrees.d[i] > 0.0))
      throw SingularityError("vertex " + std::to_string(i) +
                                 " has zero degree (isolated); raise t or sigma",
                             static_cast<std::int64_t>(i));
    L.inv_sqrt_degree.push_back(1.0 / std::sqrt(degrees.d[i]));
  }
  return L;
}

std::vector<double> laplacian_apply(const NormalizedLaplacian& L, const std::vector<double>& v,
                                    mr::Engine& engine, mr::TimingReport* report) {
  if (static_cast<std::int64_t>(v.size()) != L.n)
    throw DomainError("vector length does not match the matrix dimension");
  for (double x : v)
    if (!std::isfinite(x)) throw DomainError("vector entries must be finite");

  // One task list per worker: the recurrence around this call is serial, so
  // the coarser split keeps per-call overhead down.
  auto tasks = mr::Engine::partition_into(iota_keys(L.n), static_cast<std::size_t>(engine.workers()));
  std::vector<double> y(v.size());
  std::vector<mr::Counters> task_counters(tasks.size());
  engine.run_tasks(tasks.size(), [&](std::size_t task) {
    mr::Counters& counters = task_counters[task];
    counters.add(kMatvecCounter, 0);
    for (std::int64_t i : tasks[task]) {
      y[static_cast<std::size_t>(i)] = apply_row(L, i, v);
      counters.add(kMatvecCounter, 1);
    }
  });

  if (report) {
    report->workers = engine.workers();
    for (auto& c : task_counters) {
      report->op_counters.merge(c);
      report->task_counters.push_back(std::move(c));
    }
  }
  return y;
}

std::vector<std::vector<double>> dense_laplacian(const NormalizedLaplacian& L) {
  auto n = static_cast<std::size_t>(L.n);
  std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) dense[i][i] = 1.0;
  for (const auto& [row, ptr] : L.store->scan(L.table, 0, L.n)) {
    auto i = static_cast<std::size_t>(row);
    for (const auto& e : ptr->entries) {
      auto j = static_cast<std::size_t>(e.column);
      dense[i][j] -= L.inv_sqrt_degree[i] * L.inv_sqrt_degree[j] * e.value;
    }
  }
  return dense;
}

LanczosResult lanczos(const LinearOperator& op, std::int64_t n, std::int64_t steps,
                      std::uint64_t seed, bool reorthogonalize,
                      const std::vector<std::vector<double>>* deflate_against) {
  if (n < 1) throw DomainError("operator dimension must be positive");
  if (steps < 1 || steps > n) throw DomainError("step count must lie in 1..n");

  const std::vector<std::vector<double>> no_deflation;
  const auto& deflated = deflate_against ? *deflate_against : no_deflation;

  // Random unit start vector, drawn again if deflation swallows it.
  GaussianSource gauss(seed);
  std::vector<double> v1(static_cast<std::size_t>(n));
  for (int attempt = 0;; ++attempt) {
    if (attempt > 100) throw NumericalError("could not draw a start vector outside the deflated span");
    for (auto& x : v1) x = gauss.next();
    for (const auto& dz : deflated) axpy(-dot(v1, dz), dz, v1);
    double len = norm(v1);
    if (len > 1e-8) {
      for (auto& x : v1) x /= len;
      break;
    }
  }

  LanczosResult out;
  out.basis.push_back(std::move(v1));
  auto& alphas = out.tridiagonal.alphas;
  auto& betas = out.tridiagonal.betas;

  for (std::int64_t j = 0; j < steps; ++j) {
    auto ju = static_cast<std::size_t>(j);
    std::vector<double> w = op(out.basis[ju]);
    if (j > 0) axpy(-betas[ju - 1], out.basis[ju - 1], w);
    double alpha = dot(w, out.basis[ju]);
    axpy(-alpha, out.basis[ju], w);
    alphas.push_back(alpha);

    // Two Gram-Schmidt passes repair the orthogonality the plain recurrence
    // loses; the deflated directions are always projected out so restarts
    // stay in the orthogonal complement.
    const int passes = reorthogonalize ? 2 : 1;
    for (int pass = 0; pass < passes; ++pass) {
      for (const auto& dz : deflated) axpy(-dot(w, dz), dz, w);
      if (reorthogonalize)
        for (const auto& vb : out.basis) axpy(-dot(w, vb), vb, w);
    }

    if (j + 1 == steps) break;
    double beta = norm(w);
    if (beta < kBreakdownBeta) break;  // invariant subspace found
    for (auto& x : w) x /= beta;
    betas.push_back(beta);
    out.basis.push_back(std::move(w));
  }
  return out;
}

namespace {

struct RitzPair {
  double lambda = 0.0;
  std::vector<double> z;
  double residual = 0.0;
};

}  // namespace

SpectralEmbedding smallest_k_eigenvectors(const NormalizedLaplacian& L, std::int64_t k,
                                          mr::Engine& engine, std::uint64_t seed,
                                          bool reorthogonalize, mr::TimingReport* report,
                                          std::int64_t steps_override) {
  const std::int64_t n = L.n;
  if (k < 1) throw DomainError("cluster count must be positive");
  if (k > n) throw DomainError("cannot request more eigenvectors than the dimension");
  const double t0 = mr::detail::seconds_since_epoch_start();
  if (report && report->stage.empty()) report->stage = "eigenvectors";

  const std::int64_t m_full = std::min<std::int64_t>(n, std::max<std::int64_t>(2 * k + 20, 40));
  const std::int64_t m_L = steps_override > 0 ? std::min(steps_override, n) : m_full;

  LinearOperator op = [&](const std::vector<double>& v) {
    return laplacian_apply(L, v, engine, report);
  };

  SpectralEmbedding out;
  out.n = n;
  out.k = k;

  // A single Krylov sequence surfaces one Ritz copy per distinct eigenvalue,
  // so restarts are deflated against everything accepted so far: each probe
  // works in the orthogonal complement and can pick up further copies of a
  // multiple eigenvalue (disconnected graphs have eigenvalue 0 once per
  // component).  Probing stops when a run turns up nothing new below the
  // current k-th value.
  std::vector<RitzPair> accepted;
  double worst_residual = 0.0;
  const int max_runs = 4;  // first run + up to 3 restarts
  for (int run = 0; run < max_runs; ++run) {
    const std::int64_t remaining = n - static_cast<std::int64_t>(accepted.size());
    if (remaining < 1) break;

    std::uint64_t run_seed = seed + 0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(run);
    std::vector<std::vector<double>> deflated;
    deflated.reserve(accepted.size());
    for (const auto& pair : accepted) deflated.push_back(pair.z);

    auto lanczos_out =
        lanczos(op, n, std::min(m_L, remaining), run_seed, reorthogonalize, &deflated);
    out.run_steps.push_back(static_cast<std::int64_t>(lanczos_out.tridiagonal.alphas.size()));
    auto small_eigen = tridiagonal_eigen(lanczos_out.tridiagonal);

    // Lift every Ritz pair of this run.
    std::vector<RitzPair> fresh;
    for (std::size_t j = 0; j < small_eigen.eigenvalues.size(); ++j) {
      RitzPair pair;
      pair.lambda = small_eigen.eigenvalues[j];
      pair.z.assign(static_cast<std::size_t>(n), 0.0);
      for (std::size_t b = 0; b < lanczos_out.basis.size(); ++b)
        axpy(small_eigen.eigenvectors[j][b], lanczos_out.basis[b], pair.z);
      fresh.push_back(std::move(pair));
    }

    // Decide which fresh pairs land inside the k smallest of the combined
    // pool; only those face the residual check and get kept.
    std::vector<double> pool_lambdas;
    for (const auto& pair : accepted) pool_lambdas.push_back(pair.lambda);
    for (const auto& pair : fresh) pool_lambdas.push_back(pair.lambda);
    std::sort(pool_lambdas.begin(), pool_lambdas.end());
    const double cutoff = pool_lambdas[static_cast<std::size_t>(
        std::min<std::int64_t>(k, static_cast<std::int64_t>(pool_lambdas.size())) - 1)];

    bool any_failed = false;
    bool any_new_small = false;
    const bool have_k_before = static_cast<std::int64_t>(accepted.size()) >= k;
    const double lambda_k_before =
        have_k_before ? [&] {
          std::vector<double> ls;
          for (const auto& pair : accepted) ls.push_back(pair.lambda);
          std::sort(ls.begin(), ls.end());
          return ls[static_cast<std::size_t>(k) - 1];
        }()
                      : 0.0;
    for (auto& pair : fresh) {
      if (pair.lambda > cutoff) continue;
      std::vector<double> lz = apply_sequential(L, pair.z);
      axpy(-pair.lambda, pair.z, lz);
      pair.residual = norm(lz);
      worst_residual = std::max(worst_residual, pair.residual);
      if (pair.residual <= kResidualTolerance) {
        // Progress below the k-th value (or while the bottom set was still
        // short) means more copies of a multiple eigenvalue may remain: the
        // next run must probe again rather than conclude.
        if (!have_k_before || pair.lambda < lambda_k_before - 1e-9) any_new_small = true;
        accepted.push_back(std::move(pair));
      } else {
        any_failed = true;
      }
    }

    const bool have_k = static_cast<std::int64_t>(accepted.size()) >= k;
    const bool probed = run > 0;
    if (have_k && probed && !any_failed && !any_new_small) break;
  }

  if (static_cast<std::int64_t>(accepted.size()) < k)
    throw ConvergenceError("eigensolver could not assemble " + std::to_string(k) +
                               " residual-clean eigenpairs after 3 restarts",
                           worst_residual);

  std::stable_sort(accepted.begin(), accepted.end(),
                   [](const RitzPair& a, const RitzPair& b) { return a.lambda < b.lambda; });
  accepted.resize(static_cast<std::size_t>(k));

  out.eigenvalues.reserve(accepted.size());
  for (const auto& pair : accepted) out.eigenvalues.push_back(pair.lambda);
  out.z_rows.assign(static_cast<std::size_t>(n), std::vector<double>(static_cast<std::size_t>(k)));
  for (std::size_t c = 0; c < accepted.size(); ++c)
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
      out.z_rows[i][c] = accepted[c].z[i];

  out.y_rows = out.z_rows;
  for (auto& row : out.y_rows) {
    double len = norm(row);
    if (len < 1e-154) {
      std::fill(row.begin(), row.end(), 0.0);  // 0/0 row: fall back to e_1
      row[0] = 1.0;
      ++out.zero_rows_normalized;
    } else {
      for (auto& x : row) x /= len;
    }
  }

  if (report) {
    report->workers = engine.workers();
    report->wall_seconds += mr::detail::seconds_since_epoch_start() - t0;
  }
  return out;
}

CutVolume cut_and_volume(const SimilarityMatrix& S, const KvStore& store,
                         const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  std::vector<char> in_a(static_cast<std::size_t>(S.n), 0);
  std::vector<char> in_b(static_cast<std::size_t>(S.n), 0);
  for (std::int64_t v : a) {
    if (v < 0 || v >= S.n) throw DomainError("vertex " + std::to_string(v) + " out of range");
    in_a[static_cast<std::size_t>(v)] = 1;
  }
  for (std::int64_t v : b) {
    if (v < 0 || v >= S.n) throw DomainError("vertex " + std::to_string(v) + " out of range");
    in_b[static_cast<std::size_t>(v)] = 1;
  }

  CutVolume out;
  for (const auto& [row, ptr] : store.scan(S.table, 0, S.n)) {
    if (!in_a[static_cast<std::size_t>(row)]) continue;
    double row_sum = 0.0;
    double cut_sum = 0.0;
    for (const auto& e : ptr->entries) {
      row_sum += e.value;
      if (in_b[static_cast<std::size_t>(e.column)]) cut_sum += e.value;
    }
    out.volume += row_sum;  // vol(A) sums degrees, i.e. whole rows
    out.cut += cut_sum;
  }
  return out;
}

}  // namespace psc
