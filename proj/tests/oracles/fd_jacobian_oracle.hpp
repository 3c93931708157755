#ifndef NSFBOX_TEST_FD_JACOBIAN_ORACLE_HPP
#define NSFBOX_TEST_FD_JACOBIAN_ORACLE_HPP

// Column-wise finite-difference Jacobian of an arbitrary residual functor.
// Central differences with step 1e-7 * max(1, |x_j|). The analytic Jacobian
// of the scheme must agree with this before it is trusted.

#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

using ResidualFn =
    std::function<std::vector<double>(const std::vector<double>&)>;

// Returns a dense row-major m x n matrix, m = residual size, n = x size.
inline std::vector<double> fd_jacobian(const ResidualFn& F,
                                       std::vector<double> x) {
  const std::size_t n = x.size();
  std::vector<double> r0 = F(x);
  const std::size_t m = r0.size();
  std::vector<double> J(m * n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double step = 1e-7 * std::max(1.0, std::abs(x[j]));
    double save = x[j];
    x[j] = save + step;
    std::vector<double> rp = F(x);
    x[j] = save - step;
    std::vector<double> rm = F(x);
    x[j] = save;
    for (std::size_t i = 0; i < m; ++i)
      J[i * n + j] = (rp[i] - rm[i]) / (2.0 * step);
  }
  return J;
}

}  // namespace oracle

#endif
