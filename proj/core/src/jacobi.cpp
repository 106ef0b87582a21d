#include <algorithm>
#include <cmath>
#include <numeric>

#include "pscluster/eigensolver.hpp"
#include "pscluster/errors.hpp"

namespace psc {

// Cyclic Jacobi: sweep all (p,q) pairs, rotate each away, repeat until the
// off-diagonal mass is gone.  Slow and unconditionally reliable, which is
// exactly what an oracle should be.
EigenDecomposition jacobi_eigen_oracle(const std::vector<std::vector<double>>& input) {
  const std::size_t n = input.size();
  if (n > 256) throw DomainError("jacobi oracle is capped at n <= 256");
  for (const auto& row : input)
    if (row.size() != n) throw DomainError("matrix must be square");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(input[i][j] - input[j][i]) > 1e-12)
        throw DomainError("matrix must be symmetric within 1e-12");

  EigenDecomposition out;
  if (n == 0) return out;

  auto a = input;
  // Work on the symmetrized copy so the 1e-12 slack cannot skew rotations.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) a[i][j] = a[j][i] = (a[i][j] + a[j][i]) / 2.0;

  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

  auto off_frobenius = [&] {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) sum += 2.0 * a[i][j] * a[i][j];
    return std::sqrt(sum);
  };

  for (int sweep = 0; off_frobenius() >= 1e-13; ++sweep) {
    if (sweep > 100) throw NumericalError("jacobi rotations did not converge");
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        double c = 1.0 / std::sqrt(t * t + 1.0);
        double s = t * c;
        for (std::size_t i = 0; i < n; ++i) {
          double aip = a[i][p], aiq = a[i][q];
          a[i][p] = c * aip - s * aiq;
          a[i][q] = s * aip + c * aiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double api = a[p][i], aqi = a[q][i];
          a[p][i] = c * api - s * aqi;
          a[q][i] = s * api + c * aqi;
        }
        for (std::size_t i = 0; i < n; ++i) {
          double vip = v[i][p], viq = v[i][q];
          v[i][p] = c * vip - s * viq;
          v[i][q] = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return a[x][x] < a[y][y]; });
  out.eigenvalues.resize(n);
  out.eigenvectors.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    out.eigenvalues[j] = a[order[j]][order[j]];
    for (std::size_t i = 0; i < n; ++i) out.eigenvectors[j][i] = v[i][order[j]];
  }
  return out;
}

}  // namespace psc
