#ifndef NSFBOX_MASK_HPP
#define NSFBOX_MASK_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "geometry.hpp"
#include "grid.hpp"

namespace nsfbox {

// Cell classification against a fluid shape. A cell is fluid only if all
// 2^D corners and the center pass the strict inside test; it is solid-interior
// if none do; mixed samples mark it as straddling the interface. For the
// convex shapes supported here the corner test is exact for full containment,
// so straddling cells are exactly the ones the boundary crosses. The strip is
// the Moore (corner-connected) 1-neighbourhood of the straddling set.
template <int D>
struct DomainMask {
  std::vector<std::uint8_t> is_fluid;     // fluid cells
  std::vector<std::uint8_t> is_straddle;  // boundary crosses the closed cell
  std::vector<std::uint8_t> is_strip;     // straddle set dilated by one (Moore)
  std::vector<std::uint8_t> is_inner;     // fluid minus strip
  std::vector<std::uint8_t> is_outer;     // solid minus strip
  // Interface bands inside the solid: cells at Moore distance in [k, k+2]
  // from the fluid set, k = 1, 2. Used for interior-trace diagnostics only.
  std::vector<std::uint8_t> band1, band2;
  std::vector<std::int32_t> solid_cells;  // complement of is_fluid, ascending
  std::int64_t n_fluid = 0, n_solid = 0, n_straddle = 0, n_strip = 0, n_inner = 0, n_outer = 0;

  bool solid(std::int64_t c) const { return !is_fluid[c]; }
};

namespace detail {

// Moore dilation: mark every cell whose 3^D neighbourhood meets `src`.
template <int D>
std::vector<std::uint8_t> moore_dilate(const Grid<D>& g, const std::vector<std::uint8_t>& src) {
  std::vector<std::uint8_t> out(src);
  for (std::int64_t c = 0; c < g.ncells; ++c) {
    if (out[c]) continue;
    auto i = g.coords(c);
    bool hit = false;
    std::array<int, D> j{};
    if constexpr (D == 2) {
      for (int d0 = -1; d0 <= 1 && !hit; ++d0)
        for (int d1 = -1; d1 <= 1 && !hit; ++d1) {
          j = {i[0] + d0, i[1] + d1};
          if (src[g.cell(j)]) hit = true;
        }
    } else {
      for (int d0 = -1; d0 <= 1 && !hit; ++d0)
        for (int d1 = -1; d1 <= 1 && !hit; ++d1)
          for (int d2 = -1; d2 <= 1 && !hit; ++d2) {
            j = {i[0] + d0, i[1] + d1, i[2] + d2};
            if (src[g.cell(j)]) hit = true;
          }
    }
    if (hit) out[c] = 1;
  }
  return out;
}

}  // namespace detail

template <int D>
DomainMask<D> split_domain(const Grid<D>& g, const FluidShape<D>& shape) {
  shape.validate(g.h);
  DomainMask<D> m;
  const std::int64_t N = g.ncells;
  m.is_fluid.assign(N, 0);
  m.is_straddle.assign(N, 0);

  const int ncorners = 1 << D;
  for (std::int64_t c = 0; c < N; ++c) {
    auto corner = g.cell_corner(c);
    int in = 0;
    for (int k = 0; k < ncorners; ++k) {
      std::array<double, D> x = corner;
      for (int a = 0; a < D; ++a)
        if (k & (1 << a)) x[a] += g.h;
      if (shape.inside(x)) ++in;
    }
    if (shape.inside(g.cell_center(c))) ++in;
    if (in == ncorners + 1)
      m.is_fluid[c] = 1;
    else if (in > 0)
      m.is_straddle[c] = 1;
  }

  m.is_strip = detail::moore_dilate(g, m.is_straddle);

  m.is_inner.assign(N, 0);
  m.is_outer.assign(N, 0);
  for (std::int64_t c = 0; c < N; ++c) {
    if (m.is_fluid[c] && !m.is_strip[c]) m.is_inner[c] = 1;
    if (!m.is_fluid[c] && !m.is_strip[c]) m.is_outer[c] = 1;
    if (!m.is_fluid[c]) m.solid_cells.push_back(static_cast<std::int32_t>(c));
  }

  // Moore distance-to-fluid, capped at 5; dist[c]=0 on fluid cells.
  std::vector<std::uint8_t> reach(m.is_fluid);
  std::vector<std::uint8_t> dist(N, 255);
  for (std::int64_t c = 0; c < N; ++c)
    if (reach[c]) dist[c] = 0;
  for (std::uint8_t d = 1; d <= 5; ++d) {
    reach = detail::moore_dilate(g, reach);
    for (std::int64_t c = 0; c < N; ++c)
      if (reach[c] && dist[c] == 255) dist[c] = d;
  }
  m.band1.assign(N, 0);
  m.band2.assign(N, 0);
  for (std::int64_t c = 0; c < N; ++c) {
    if (m.is_fluid[c]) continue;
    if (dist[c] >= 1 && dist[c] <= 3) m.band1[c] = 1;
    if (dist[c] >= 2 && dist[c] <= 4) m.band2[c] = 1;
  }

  for (std::int64_t c = 0; c < N; ++c) {
    m.n_fluid += m.is_fluid[c];
    m.n_straddle += m.is_straddle[c];
    m.n_strip += m.is_strip[c];
    m.n_inner += m.is_inner[c];
    m.n_outer += m.is_outer[c];
  }
  m.n_solid = N - m.n_fluid;

  // Structural invariants of the decomposition.
  for (std::int64_t c = 0; c < N; ++c) {
    if (m.is_straddle[c] && m.is_fluid[c])
      throw std::logic_error("mask: straddling cell classified as fluid");
    if (m.is_inner[c] + m.is_outer[c] + m.is_strip[c] != 1)
      throw std::logic_error("mask: inner/outer/strip must partition the grid");
    if (m.band1[c] && m.is_fluid[c]) throw std::logic_error("mask: band1 must lie in the solid");
    if (m.band2[c] && m.is_fluid[c]) throw std::logic_error("mask: band2 must lie in the solid");
  }
  if (shape.kind != ShapeKind::Full && shape.kind != ShapeKind::Empty) {
    if (m.n_straddle == 0) throw std::logic_error("mask: interface shape produced no straddling cells");
    if (m.n_fluid == 0) throw std::logic_error("mask: fluid region not resolved on this grid");
  }
  return m;
}

}  // namespace nsfbox

#endif
