#ifndef NSFBOX_FIELD_HPP
#define NSFBOX_FIELD_HPP

#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "grid.hpp"
#include "util.hpp"

namespace nsfbox {

// Cell-mean projection. Means are taken with a tensorized 4-point
// Gauss-Legendre rule (degree 7), evaluated as
//   mean = f(center) + sum_i w_i (f(x_i) - f(center))
// so that a locally constant f projects to exactly f(center) in floating
// point: the correction terms vanish identically instead of summing rounding
// residue from the weights.
struct GaussCellRule {
  static constexpr int q = 4;
  std::array<double, 4> node{};    // on (0,1)
  std::array<double, 4> weight{};  // sums to 1

  GaussCellRule() {
    const double r1 = std::sqrt((3.0 - 2.0 * std::sqrt(6.0 / 5.0)) / 7.0);
    const double r2 = std::sqrt((3.0 + 2.0 * std::sqrt(6.0 / 5.0)) / 7.0);
    const double w1 = (18.0 + std::sqrt(30.0)) / 36.0;
    const double w2 = (18.0 - std::sqrt(30.0)) / 36.0;
    node = {0.5 * (1.0 - r2), 0.5 * (1.0 - r1), 0.5 * (1.0 + r1), 0.5 * (1.0 + r2)};
    weight = {0.5 * w2, 0.5 * w1, 0.5 * w1, 0.5 * w2};
  }
};

template <int D, typename F>
double cell_mean(F&& f, const std::array<double, D>& corner, double h, const GaussCellRule& rule) {
  std::array<double, D> center{};
  for (int a = 0; a < D; ++a) center[a] = corner[a] + 0.5 * h;
  const double fc = f(center);
  double corr = 0.0;
  std::array<double, D> x{};
  if constexpr (D == 2) {
    for (int i = 0; i < 4; ++i) {
      x[0] = corner[0] + rule.node[i] * h;
      for (int j = 0; j < 4; ++j) {
        x[1] = corner[1] + rule.node[j] * h;
        corr += rule.weight[i] * rule.weight[j] * (f(x) - fc);
      }
    }
  } else {
    for (int i = 0; i < 4; ++i) {
      x[0] = corner[0] + rule.node[i] * h;
      for (int j = 0; j < 4; ++j) {
        x[1] = corner[1] + rule.node[j] * h;
        for (int k = 0; k < 4; ++k) {
          x[2] = corner[2] + rule.node[k] * h;
          corr += rule.weight[i] * rule.weight[j] * rule.weight[k] * (f(x) - fc);
        }
      }
    }
  }
  return fc + corr;
}

template <int D, typename F>
std::vector<double> project_cells(F&& f, const Grid<D>& g, int threads = 1) {
  static const GaussCellRule rule;
  std::vector<double> out(g.ncells);
  parallel_for(static_cast<std::size_t>(g.ncells), threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c)
      out[c] = cell_mean<D>(f, g.cell_corner(static_cast<std::int64_t>(c)), g.h, rule);
  });
  return out;
}

// Velocity fields are stored component-major: u[j*N + c].
template <int D, typename F>
std::vector<double> project_velocity(F&& f, const Grid<D>& g, int threads = 1) {
  static const GaussCellRule rule;
  const std::int64_t N = g.ncells;
  std::vector<double> out(static_cast<std::size_t>(D) * N);
  for (int j = 0; j < D; ++j) {
    auto comp = [&f, j](const std::array<double, D>& x) { return f(x)[j]; };
    parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t c = lo; c < hi; ++c)
        out[static_cast<std::size_t>(j) * N + c] =
            cell_mean<D>(comp, g.cell_corner(static_cast<std::int64_t>(c)), g.h, rule);
    });
  }
  return out;
}

// Face trace helpers for the face (axis, cell): in = cell, out = cell + e_axis.
inline double face_avg(double vin, double vout) { return 0.5 * (vin + vout); }
inline double face_jump(double vin, double vout) { return vout - vin; }

// Upwind trace index for normal velocity ubar = avg(u_axis) at the face:
// flow along +e_axis (ubar > 0) takes the in-cell value; the tie ubar == 0
// also resolves to the in-cell so the choice is deterministic.
inline bool upwind_is_in(double ubar) { return ubar >= 0.0; }

inline double upwind_value(double vin, double vout, double ubar) {
  return upwind_is_in(ubar) ? vin : vout;
}
inline double downwind_value(double vin, double vout, double ubar) {
  return upwind_is_in(ubar) ? vout : vin;
}

// Dissipative mass flux through a face: upwind transport plus an h^alpha
// jump penalty.  `r` is any cell-centred density-like quantity.
inline double dissipative_flux(double r_in, double r_out, double ubar, double halpha) {
  return upwind_value(r_in, r_out, ubar) * ubar - halpha * (r_out - r_in);
}

}  // namespace nsfbox

#endif
