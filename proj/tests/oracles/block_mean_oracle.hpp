#ifndef NSFBOX_TEST_BLOCK_MEAN_ORACLE_HPP
#define NSFBOX_TEST_BLOCK_MEAN_ORACLE_HPP

// Direct block-mean restriction between nested uniform grids, written
// independently of the experiments module. Coarse cell (I,J,...) receives the
// arithmetic mean of the r^dim fine cells it contains, r = nf/nc.

#include <cstddef>
#include <vector>

namespace oracle {

inline std::vector<double> block_mean(const std::vector<double>& fine, int nf,
                                      int nc, int dim) {
  const int r = nf / nc;
  std::size_t Nc = 1;
  for (int a = 0; a < dim; ++a) Nc *= static_cast<std::size_t>(nc);
  std::vector<double> coarse(Nc, 0.0);
  double inv = 1.0;
  for (int a = 0; a < dim; ++a) inv /= r;
  if (dim == 2) {
    for (int J = 0; J < nc; ++J)
      for (int I = 0; I < nc; ++I) {
        double s = 0.0;
        for (int j = 0; j < r; ++j)
          for (int i = 0; i < r; ++i)
            s += fine[(I * r + i) + static_cast<std::size_t>(nf) * (J * r + j)];
        coarse[I + static_cast<std::size_t>(nc) * J] = s * inv;
      }
  } else {
    for (int K = 0; K < nc; ++K)
      for (int J = 0; J < nc; ++J)
        for (int I = 0; I < nc; ++I) {
          double s = 0.0;
          for (int k = 0; k < r; ++k)
            for (int j = 0; j < r; ++j)
              for (int i = 0; i < r; ++i) {
                std::size_t f =
                    (I * r + i) +
                    static_cast<std::size_t>(nf) *
                        ((J * r + j) +
                         static_cast<std::size_t>(nf) * (K * r + k));
                s += fine[f];
              }
          coarse[I + static_cast<std::size_t>(nc) * (J + static_cast<std::size_t>(nc) * K)] =
              s * inv;
        }
  }
  return coarse;
}

}  // namespace oracle

#endif
