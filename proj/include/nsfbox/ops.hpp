#ifndef NSFBOX_OPS_HPP
#define NSFBOX_OPS_HPP

#include <Eigen/Sparse>
#include <cmath>
#include <vector>

#include "field.hpp"
#include "grid.hpp"
#include "util.hpp"

namespace nsfbox {

// Discrete operators on cell fields. Conventions:
//   - central difference along axis a:   (v[c+a] - v[c-a]) / (2h)
//   - face (dual) difference at (a,c):   (v[c+a] - v[c]) / h
//   - tight Laplacian:                   sum_a (v[c+a] - 2 v[c] + v[c-a]) / h^2
// Gradients of scalars and tensors are component-major like velocity:
// grad[a*N + c]; tensor entries T[(row*D + col)*N + c] with row the velocity
// component and col the derivative axis.

template <int D>
std::vector<double> grad_central(const std::vector<double>& v, const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  std::vector<double> out(static_cast<std::size_t>(D) * N);
  const double inv2h = 1.0 / (2.0 * g.h);
  for (int a = 0; a < D; ++a)
    for (std::int64_t c = 0; c < N; ++c)
      out[static_cast<std::size_t>(a) * N + c] = (v[g.nbr[a][c]] - v[g.nbr_m[a][c]]) * inv2h;
  return out;
}

template <int D>
std::vector<double> velocity_gradient(const std::vector<double>& u, const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  std::vector<double> out(static_cast<std::size_t>(D) * D * N);
  const double inv2h = 1.0 / (2.0 * g.h);
  for (int j = 0; j < D; ++j)
    for (int a = 0; a < D; ++a) {
      const double* uj = u.data() + static_cast<std::size_t>(j) * N;
      double* dst = out.data() + (static_cast<std::size_t>(j) * D + a) * N;
      for (std::int64_t c = 0; c < N; ++c) dst[c] = (uj[g.nbr[a][c]] - uj[g.nbr_m[a][c]]) * inv2h;
    }
  return out;
}

template <int D>
std::vector<double> div_central(const std::vector<double>& u, const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  std::vector<double> out(N, 0.0);
  const double inv2h = 1.0 / (2.0 * g.h);
  for (int a = 0; a < D; ++a) {
    const double* ua = u.data() + static_cast<std::size_t>(a) * N;
    for (std::int64_t c = 0; c < N; ++c) out[c] += (ua[g.nbr[a][c]] - ua[g.nbr_m[a][c]]) * inv2h;
  }
  return out;
}

template <int D>
std::vector<double> sym_gradient(const std::vector<double>& u, const Grid<D>& g) {
  auto gradu = velocity_gradient(u, g);
  const std::int64_t N = g.ncells;
  std::vector<double> out(gradu.size());
  for (int j = 0; j < D; ++j)
    for (int a = 0; a < D; ++a)
      for (std::int64_t c = 0; c < N; ++c)
        out[(static_cast<std::size_t>(j) * D + a) * N + c] =
            0.5 * (gradu[(static_cast<std::size_t>(j) * D + a) * N + c] +
                   gradu[(static_cast<std::size_t>(a) * D + j) * N + c]);
  return out;
}

// Per-face difference quotient, indexed like faces: out[a*N + c] is the
// gradient component across the face between c and c + e_a.
template <int D>
std::vector<double> grad_faces(const std::vector<double>& v, const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  std::vector<double> out(static_cast<std::size_t>(D) * N);
  const double invh = 1.0 / g.h;
  for (int a = 0; a < D; ++a)
    for (std::int64_t c = 0; c < N; ++c)
      out[static_cast<std::size_t>(a) * N + c] = (v[g.nbr[a][c]] - v[c]) * invh;
  return out;
}

template <int D>
std::vector<double> laplace_tight(const std::vector<double>& v, const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  std::vector<double> out(N, 0.0);
  const double invh2 = 1.0 / (g.h * g.h);
  for (int a = 0; a < D; ++a)
    for (std::int64_t c = 0; c < N; ++c)
      out[c] += (v[g.nbr[a][c]] - 2.0 * v[c] + v[g.nbr_m[a][c]]) * invh2;
  return out;
}

// Integrals: cells carry |K| = h^D, faces carry |sigma| = h^(D-1), dual cells
// |D_sigma| = h^D. All reduce through pairwise_sum.
template <int D>
double cell_integral(const std::vector<double>& v, const Grid<D>& g) {
  return g.cell_volume() * pairwise_sum(v);
}

template <int D>
double face_integral(const std::vector<double>& face_vals, const Grid<D>& g) {
  return g.face_area() * pairwise_sum(face_vals);
}

template <int D>
double dual_integral(const std::vector<double>& face_vals, const Grid<D>& g) {
  return g.cell_volume() * pairwise_sum(face_vals);
}

template <int D>
double inner_product_cells(const std::vector<double>& a, const std::vector<double>& b,
                           const Grid<D>& g) {
  std::vector<double> prod(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) prod[i] = a[i] * b[i];
  return g.cell_volume() * pairwise_sum(prod);
}

// Sparse matrix forms of the same stencils, used to cross-check the
// matrix-free kernels and their adjoints.
template <int D>
Eigen::SparseMatrix<double> central_diff_matrix(const Grid<D>& g, int axis) {
  const std::int64_t N = g.ncells;
  const double inv2h = 1.0 / (2.0 * g.h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * static_cast<std::size_t>(N));
  for (std::int64_t c = 0; c < N; ++c) {
    trip.emplace_back(static_cast<int>(c), g.nbr[axis][c], inv2h);
    trip.emplace_back(static_cast<int>(c), g.nbr_m[axis][c], -inv2h);
  }
  Eigen::SparseMatrix<double> M(static_cast<int>(N), static_cast<int>(N));
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

template <int D>
Eigen::SparseMatrix<double> laplace_matrix(const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  const double invh2 = 1.0 / (g.h * g.h);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve((2 * D + 1) * static_cast<std::size_t>(N));
  for (std::int64_t c = 0; c < N; ++c) {
    trip.emplace_back(static_cast<int>(c), static_cast<int>(c), -2.0 * D * invh2);
    for (int a = 0; a < D; ++a) {
      trip.emplace_back(static_cast<int>(c), g.nbr[a][c], invh2);
      trip.emplace_back(static_cast<int>(c), g.nbr_m[a][c], invh2);
    }
  }
  Eigen::SparseMatrix<double> M(static_cast<int>(N), static_cast<int>(N));
  M.setFromTriplets(trip.begin(), trip.end());
  return M;
}

// Summation-by-parts checks on random periodic fields:
//   (1) sum_K |K| v (div_c u)  = - sum_K |K| grad_c v . u
//   (2) sum_K |K| v (lap w)    = - sum_faces |D_sigma| (face-grad v)(face-grad w)
//   (3) sum_faces |sigma| jump(v) avg(w) + avg(v) jump(w) = sum |sigma| jump(v w)
// Returns the largest relative defect over the three identities.
template <int D>
double check_summation_by_parts(const Grid<D>& g, std::uint64_t seed) {
  const std::int64_t N = g.ncells;
  Rng rng(seed);
  std::vector<double> v(N), w(N), u(static_cast<std::size_t>(D) * N);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  for (auto& x : u) x = rng.uniform(-1.0, 1.0);

  double worst = 0.0;
  {
    auto divu = div_central(u, g);
    auto gv = grad_central(v, g);
    double lhs = inner_product_cells<D>(v, divu, g);
    double rhs = 0.0;
    std::vector<double> prod(static_cast<std::size_t>(D) * N);
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = gv[i] * u[i];
    rhs = -g.cell_volume() * pairwise_sum(prod);
    worst = std::max(worst, std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs)));
  }
  {
    auto lw = laplace_tight(w, g);
    auto lv = laplace_tight(v, g);
    auto gv = grad_faces(v, g);
    auto gw = grad_faces(w, g);
    std::vector<double> prod(gv.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = gv[i] * gw[i];
    const double mid = -dual_integral<D>(prod, g);
    const double lhs = inner_product_cells<D>(v, lw, g);   // int v lap w
    const double rhs = inner_product_cells<D>(w, lv, g);   // int (lap v) w
    worst = std::max(worst, std::fabs(lhs - mid) / std::max(1.0, std::fabs(lhs)));
    worst = std::max(worst, std::fabs(rhs - mid) / std::max(1.0, std::fabs(rhs)));
  }
  {
    // Face-field pairing: int v div_T w_f = -int_dual grad_E v . w_f for an
    // arbitrary face field w_f (the discrete trace of the normal-flux rule).
    std::vector<double> wf(static_cast<std::size_t>(D) * N);
    for (auto& x : wf) x = rng.uniform(-1.0, 1.0);
    std::vector<double> divT(N, 0.0);
    for (int a = 0; a < D; ++a)
      for (std::int64_t c = 0; c < N; ++c)
        divT[c] += (wf[static_cast<std::size_t>(a) * N + c] -
                    wf[static_cast<std::size_t>(a) * N + g.nbr_m[a][c]]) /
                   g.h;
    auto gv = grad_faces(v, g);
    std::vector<double> prod(wf.size());
    for (std::size_t i = 0; i < prod.size(); ++i) prod[i] = gv[i] * wf[i];
    const double lhs = inner_product_cells<D>(v, divT, g);
    const double rhs = -dual_integral<D>(prod, g);
    worst = std::max(worst, std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs)));
  }
  {
    // div_h equals the trace of the velocity gradient, cell by cell.
    auto Gm = velocity_gradient(u, g);
    auto divu = div_central(u, g);
    for (std::int64_t c = 0; c < N; ++c) {
      double tr = 0.0;
      for (int j = 0; j < D; ++j) tr += Gm[(static_cast<std::size_t>(j) * D + j) * N + c];
      worst = std::max(worst, std::fabs(tr - divu[c]) / std::max(1.0, std::fabs(tr)));
    }
  }
  {
    std::vector<double> lhs_terms(static_cast<std::size_t>(D) * N), rhs_terms(lhs_terms.size());
    for (int a = 0; a < D; ++a)
      for (std::int64_t c = 0; c < N; ++c) {
        const std::int64_t o = g.nbr[a][c];
        const std::size_t f = static_cast<std::size_t>(a) * N + c;
        lhs_terms[f] = face_jump(v[c], v[o]) * face_avg(w[c], w[o]) +
                       face_avg(v[c], v[o]) * face_jump(w[c], w[o]);
        rhs_terms[f] = face_jump(v[c] * w[c], v[o] * w[o]);
      }
    double lhs = face_integral<D>(lhs_terms, g);
    double rhs = face_integral<D>(rhs_terms, g);
    worst = std::max(worst, std::fabs(lhs - rhs) / std::max(1.0, std::fabs(lhs)));
  }
  return worst;
}

}  // namespace nsfbox

#endif
