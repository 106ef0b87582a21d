#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pscluster/kvstore.hpp"
#include "pscluster/mapreduce.hpp"
#include "pscluster/similarity.hpp"

namespace psc {

struct DegreeVector {
  std::vector<double> d;  // exact row sums of S
};

DegreeVector degree_vector(const SimilarityMatrix& S, const KvStore& store);

// The operator L_sym = I - D^(-1/2) S D^(-1/2), applied matrix-free against
// the S rows still sitting in the kvstore.
struct NormalizedLaplacian {
  const KvStore* store = nullptr;
  std::string table;
  std::int64_t n = 0;
  std::vector<double> inv_sqrt_degree;
};

// Rejects zero degrees (isolated vertex): normalization divides by sqrt(d_i).
NormalizedLaplacian make_laplacian(const SimilarityMatrix& S, const DegreeVector& degrees,
                                   const KvStore& store);

// v - D^(-1/2) S D^(-1/2) v, row-parallel over the engine (one task list per
// worker); adds n to the mat-vec row-product counter.  `report`, when given,
// accumulates counters and task breakdowns across calls.
std::vector<double> laplacian_apply(const NormalizedLaplacian& L, const std::vector<double>& v,
                                    mr::Engine& engine, mr::TimingReport* report = nullptr);

// Dense assembly of the same operator, for oracle comparisons.
std::vector<std::vector<double>> dense_laplacian(const NormalizedLaplacian& L);

struct TridiagonalMatrix {
  std::vector<double> alphas;  // diagonal, length m
  std::vector<double> betas;   // subdiagonal, length m-1
};

struct LanczosResult {
  TridiagonalMatrix tridiagonal;
  std::vector<std::vector<double>> basis;  // basis[j] = v_j, orthonormal
};

using LinearOperator = std::function<std::vector<double>(const std::vector<double>&)>;

// The tridiagonalization recurrence: w <- L v_j - beta_j v_{j-1};
// alpha_j <- (w, v_j); w <- w - alpha_j v_j; beta_{j+1} <- ||w||, stopping
// early when beta falls below 1e-12 (invariant subspace).  Full
// reorthogonalization against all previous basis vectors is on by default;
// turning it off reproduces the textbook recurrence's loss of orthogonality.
// Vectors in `deflate_against` are projected out of the start vector and of
// every iterate, confining the recurrence to their orthogonal complement.
LanczosResult lanczos(const LinearOperator& op, std::int64_t n, std::int64_t steps,
                      std::uint64_t seed, bool reorthogonalize = true,
                      const std::vector<std::vector<double>>* deflate_against = nullptr);

struct EigenDecomposition {
  std::vector<double> eigenvalues;                 // ascending
  std::vector<std::vector<double>> eigenvectors;   // [j] pairs with eigenvalues[j]
};

// Implicit-shift QL on the tridiagonal form, eigenvectors accumulated;
// NumericalError after 30*m total rotations-sweeps without convergence.
EigenDecomposition tridiagonal_eigen(const TridiagonalMatrix& T);

// Cyclic Jacobi rotations on a dense symmetric matrix (n <= 256) until the
// off-diagonal Frobenius norm drops below 1e-13.  Brute-force test oracle.
EigenDecomposition jacobi_eigen_oracle(const std::vector<std::vector<double>>& a);

struct SpectralEmbedding {
  std::int64_t n = 0;
  std::int64_t k = 0;
  std::vector<double> eigenvalues;            // k smallest, ascending
  std::vector<std::vector<double>> z_rows;    // n rows of the eigenvector matrix Z
  std::vector<std::vector<double>> y_rows;    // row-normalized Z
  std::int64_t zero_rows_normalized = 0;      // rows replaced by e_1 during normalization
  std::vector<std::int64_t> run_steps;        // Lanczos steps per run (first + restarts)
};

// k smallest eigenpairs via Lanczos with m_L = min(n, max(2k+20, 40)) steps,
// restarting (fresh seed, accepted Ritz vectors deflated out) up to 3 times:
// restarts both repair residual failures and pick up extra copies of
// multiple eigenvalues that a single Krylov sequence cannot see.  Retained
// pairs must pass ||L z - lambda z|| <= 1e-6.
SpectralEmbedding smallest_k_eigenvectors(const NormalizedLaplacian& L, std::int64_t k,
                                          mr::Engine& engine, std::uint64_t seed,
                                          bool reorthogonalize = true,
                                          mr::TimingReport* report = nullptr,
                                          std::int64_t steps_override = 0);

struct CutVolume {
  double cut = 0.0;     // W(A,B)
  double volume = 0.0;  // vol(A)
};

CutVolume cut_and_volume(const SimilarityMatrix& S, const KvStore& store,
                         const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b);

}  // namespace psc
