#ifndef NSFBOX_TEST_QUADRATURE_ORACLE_HPP
#define NSFBOX_TEST_QUADRATURE_ORACLE_HPP

// Independent high-order Gauss-Legendre cell-mean evaluator.
// Nodes are generated from scratch by Newton iteration on the Legendre
// recurrence, so this shares no tables or code with the production
// projection. Used to freeze expected cell means and to bound the error
// of the production fixed-order rule.

#include <array>
#include <cmath>
#include <functional>
#include <vector>

namespace oracle {

struct GaussRule {
  std::vector<double> x;  // nodes on [-1,1]
  std::vector<double> w;  // weights, sum = 2
};

inline GaussRule gauss_legendre(int q) {
  GaussRule rule;
  rule.x.resize(q);
  rule.w.resize(q);
  for (int i = 0; i < q; ++i) {
    // Chebyshev-like initial guess, then Newton on P_q(x) = 0.
    double x = std::cos(M_PI * (i + 0.75) / (q + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= q; ++k) {
        double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = q * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) {
        // one polishing pass after convergence
        double q0 = 1.0, q1 = x;
        for (int k = 2; k <= q; ++k) {
          double q2 = ((2.0 * k - 1.0) * x * q1 - (k - 1.0) * q0) / k;
          q0 = q1;
          q1 = q2;
        }
        dp = q * (x * q1 - q0) / (x * x - 1.0);
        break;
      }
    }
    rule.x[i] = x;
    rule.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

// Mean of f over the axis-aligned cell [lo, lo+h]^dim, tensor rule of order q.
inline double cell_mean(const std::function<double(const std::array<double, 3>&)>& f,
                        const std::array<double, 3>& lo, double h, int dim, int q) {
  GaussRule g = gauss_legendre(q);
  std::array<int, 3> idx{0, 0, 0};
  int npts = 1;
  for (int a = 0; a < dim; ++a) npts *= q;
  double sum = 0.0;
  for (int p = 0; p < npts; ++p) {
    int rem = p;
    double wt = 1.0;
    std::array<double, 3> pt{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      idx[a] = rem % q;
      rem /= q;
      pt[a] = lo[a] + 0.5 * h * (1.0 + g.x[idx[a]]);
      wt *= 0.5 * g.w[idx[a]];
    }
    sum += wt * f(pt);
  }
  return sum;
}

}  // namespace oracle

#endif
