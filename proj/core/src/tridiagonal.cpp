#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "pscluster/eigensolver.hpp"
#include "pscluster/errors.hpp"

namespace psc {

// Implicit-shift QL with eigenvector accumulation (the classic EISPACK
// imtql2 scheme).  The input is already tridiagonal, so the accumulator
// starts from the identity and ends up holding the eigenvectors of T.
EigenDecomposition tridiagonal_eigen(const TridiagonalMatrix& T) {
  const std::size_t m = T.alphas.size();
  if (T.betas.size() + 1 != m && !(m == 0 && T.betas.empty()))
    throw DomainError("tridiagonal matrix needs m alphas and m-1 betas");
  for (double a : T.alphas)
    if (!std::isfinite(a)) throw DomainError("tridiagonal entries must be finite");
  for (double b : T.betas)
    if (!std::isfinite(b)) throw DomainError("tridiagonal entries must be finite");

  EigenDecomposition out;
  if (m == 0) return out;

  std::vector<double> d = T.alphas;
  std::vector<double> e(m, 0.0);  // subdiagonal, shifted so e[i] couples d[i] and d[i+1]
  for (std::size_t i = 0; i + 1 < m; ++i) e[i] = T.betas[i];

  // z[i][j]: i-th component of the j-th accumulated eigenvector.
  std::vector<std::vector<double>> z(m, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < m; ++i) z[i][i] = 1.0;

  const std::size_t iteration_budget = 30 * m;
  std::size_t iterations = 0;
  for (std::size_t l = 0; l < m; ++l) {
    while (true) {
      // Look for a negligible subdiagonal to split the problem at.
      std::size_t split = l;
      while (split + 1 < m) {
        double scale = std::abs(d[split]) + std::abs(d[split + 1]);
        if (std::abs(e[split]) <= std::numeric_limits<double>::epsilon() * scale) break;
        ++split;
      }
      if (split == l) break;  // d[l] converged

      if (++iterations > iteration_budget)
        throw NumericalError("tridiagonal QL did not converge within 30*m sweeps");

      // Wilkinson shift from the leading 2x2, then one implicit QL sweep
      // chasing the bulge from `split` back down to l.
      double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
      double r = std::hypot(g, 1.0);
      g = d[split] - d[l] + e[l] / (g + std::copysign(r, g));
      double s = 1.0, c = 1.0, p = 0.0;
      bool underflow = false;
      for (std::size_t i = split; i-- > l;) {
        double f = s * e[i];
        double b = c * e[i];
        r = std::hypot(f, g);
        e[i + 1] = r;
        if (r == 0.0) {
          d[i + 1] -= p;
          e[split] = 0.0;
          underflow = true;
          break;
        }
        s = f / r;
        c = g / r;
        g = d[i + 1] - p;
        r = (d[i] - g) * s + 2.0 * c * b;
        p = s * r;
        d[i + 1] = g + p;
        g = c * r - b;
        for (std::size_t row = 0; row < m; ++row) {
          f = z[row][i + 1];
          z[row][i + 1] = s * z[row][i] + c * f;
          z[row][i] = c * z[row][i] - s * f;
        }
      }
      if (underflow) continue;
      d[l] -= p;
      e[l] = g;
      e[split] = 0.0;
    }
  }

  // Sort ascending, carrying eigenvectors along.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return d[a] < d[b]; });
  out.eigenvalues.resize(m);
  out.eigenvectors.assign(m, std::vector<double>(m, 0.0));
  for (std::size_t j = 0; j < m; ++j) {
    out.eigenvalues[j] = d[order[j]];
    for (std::size_t i = 0; i < m; ++i) out.eigenvectors[j][i] = z[i][order[j]];
  }
  return out;
}

}  // namespace psc
