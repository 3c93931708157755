#ifndef NSFBOX_GRID_HPP
#define NSFBOX_GRID_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nsfbox {

// Uniform periodic grid on [0,L)^D. Cells are cubes of side h = L/n indexed
// lexicographically: c = i0 + n*(i1 + n*i2). Faces are keyed by (axis a, cell
// c) and sit between c ("in") and its +e_a neighbour ("out"); every geometric
// face appears exactly once under this keying, n^D faces per axis.
template <int D>
struct Grid {
  static_assert(D == 2 || D == 3, "only 2d and 3d grids are supported");

  int n = 0;
  double L = 0.0;
  double h = 0.0;
  std::int64_t ncells = 0;

  // nbr[a][c] / nbr_m[a][c]: periodic neighbour of c in the +/- e_a direction.
  std::array<std::vector<std::int32_t>, D> nbr;
  std::array<std::vector<std::int32_t>, D> nbr_m;

  std::int64_t nfaces() const { return static_cast<std::int64_t>(D) * ncells; }
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < D; ++a) v *= h;
    return v;
  }
  double face_area() const { return cell_volume() / h; }

  std::array<int, D> coords(std::int64_t c) const {
    std::array<int, D> i{};
    for (int a = 0; a < D; ++a) {
      i[a] = static_cast<int>(c % n);
      c /= n;
    }
    return i;
  }

  std::int64_t cell(const std::array<int, D>& i) const {
    std::int64_t c = 0;
    for (int a = D - 1; a >= 0; --a) {
      int w = ((i[a] % n) + n) % n;
      c = c * n + w;
    }
    return c;
  }

  std::array<double, D> cell_center(std::int64_t c) const {
    auto i = coords(c);
    std::array<double, D> x{};
    for (int a = 0; a < D; ++a) x[a] = (i[a] + 0.5) * h;
    return x;
  }

  std::array<double, D> cell_corner(std::int64_t c) const {
    auto i = coords(c);
    std::array<double, D> x{};
    for (int a = 0; a < D; ++a) x[a] = i[a] * h;
    return x;
  }

  std::int32_t shift(std::int64_t c, int axis, int steps) const {
    auto i = coords(c);
    i[axis] += steps;
    return static_cast<std::int32_t>(cell(i));
  }
};

template <int D>
Grid<D> build_grid(int n, double L) {
  if (n < 4) throw std::invalid_argument("grid: n must be at least 4, got " + std::to_string(n));
  if (!(L > 0.0)) throw std::invalid_argument("grid: L must be positive");
  Grid<D> g;
  g.n = n;
  g.L = L;
  g.h = L / n;
  g.ncells = 1;
  for (int a = 0; a < D; ++a) g.ncells *= n;
  for (int a = 0; a < D; ++a) {
    g.nbr[a].resize(g.ncells);
    g.nbr_m[a].resize(g.ncells);
  }
  for (std::int64_t c = 0; c < g.ncells; ++c) {
    for (int a = 0; a < D; ++a) {
      g.nbr[a][c] = g.shift(c, a, +1);
      g.nbr_m[a][c] = g.shift(c, a, -1);
    }
  }
  return g;
}

}  // namespace nsfbox

#endif
