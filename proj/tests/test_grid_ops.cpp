#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nsfbox/field.hpp"
#include "nsfbox/grid.hpp"
#include "nsfbox/ops.hpp"
#include "nsfbox/util.hpp"

using namespace nsfbox;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Field r[c] = i0 on an n=4 grid; the wrap across i0 = 3 -> 0 exercises the
// periodic stencil closure with hand-checkable values.
std::vector<double> axis0_ramp(const Grid<2>& g) {
  std::vector<double> r(g.ncells);
  for (std::int64_t c = 0; c < g.ncells; ++c) r[c] = static_cast<double>(g.coords(c)[0]);
  return r;
}

}  // namespace

TEST_CASE("grid counting and periodic indexing") {
  auto g2 = build_grid<2>(4, 1.0);
  CHECK(g2.ncells == 16);
  CHECK(g2.nfaces() == 32);
  CHECK(g2.h == 0.25);
  CHECK(g2.cell_volume() == 0.0625);
  CHECK(g2.face_area() == 0.25);

  auto g3 = build_grid<3>(4, 1.0);
  CHECK(g3.ncells == 64);
  CHECK(g3.nfaces() == 192);
  CHECK(g3.cell_volume() == 0.25 * 0.25 * 0.25);
  CHECK(g3.face_area() == 0.0625);

  // coords/cell round trip and neighbour wrap.
  for (std::int64_t c = 0; c < g2.ncells; ++c) CHECK(g2.cell(g2.coords(c)) == c);
  CHECK(g2.nbr[0][3] == 0);    // i0 = 3 wraps to i0 = 0
  CHECK(g2.nbr_m[0][0] == 3);  // i0 = 0 wraps back to i0 = 3
  CHECK(g2.nbr[1][12] == 0);   // i1 = 3 wraps to i1 = 0
  for (std::int64_t c = 0; c < g3.ncells; ++c)
    for (int a = 0; a < 3; ++a) {
      CHECK(g3.nbr_m[a][g3.nbr[a][c]] == c);
      CHECK(g3.shift(c, a, 4) == c);
    }

  auto ctr = g2.cell_center(0);
  CHECK(ctr[0] == 0.125);
  CHECK(ctr[1] == 0.125);
  auto cor = g2.cell_corner(5);
  CHECK(cor[0] == 0.25);
  CHECK(cor[1] == 0.25);

  CHECK_THROWS_AS(build_grid<2>(3, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_grid<2>(4, 0.0), std::invalid_argument);
}

TEST_CASE("stencils reproduce hand values on an axis ramp") {
  auto g = build_grid<2>(4, 1.0);
  auto r = axis0_ramp(g);
  const std::int64_t N = g.ncells;

  auto gc = grad_central(r, g);
  auto lap = laplace_tight(r, g);
  auto gf = grad_faces(r, g);
  for (std::int64_t c = 0; c < N; ++c) {
    const int i0 = g.coords(c)[0];
    // (r(i0+1) - r(i0-1)) / (2h) with the periodic wrap at both ends.
    const double want_g = (i0 == 1) ? 4.0 : (i0 == 2) ? 4.0 : -4.0;
    CHECK(gc[c] == want_g);
    CHECK(gc[N + c] == 0.0);
    const double want_l = (i0 == 0) ? 64.0 : (i0 == 3) ? -64.0 : 0.0;
    CHECK(lap[c] == want_l);
    const double want_f = (i0 == 3) ? -12.0 : 4.0;
    CHECK(gf[c] == want_f);
    CHECK(gf[N + c] == 0.0);
  }

  // div of u = (ramp, 0) equals the axis-0 central derivative.
  std::vector<double> u(2 * N, 0.0);
  for (std::int64_t c = 0; c < N; ++c) u[c] = r[c];
  auto dv = div_central(u, g);
  for (std::int64_t c = 0; c < N; ++c) CHECK(dv[c] == gc[c]);

  // sym_gradient of that field: D_01 = D_10 = half the axis-1 derivative of
  // u_0 (zero here), D_00 = full central derivative.
  auto Dm = sym_gradient(u, g);
  for (std::int64_t c = 0; c < N; ++c) {
    CHECK(Dm[0 * N + c] == gc[c]);
    CHECK(Dm[1 * N + c] == Dm[2 * N + c]);
    CHECK(Dm[3 * N + c] == 0.0);
  }
}

TEST_CASE("summation-by-parts identities on random fields") {
  std::uint64_t seed = 901;
  for (int n : {4, 8, 16}) {
    auto g = build_grid<2>(n, 1.0);
    CHECK(check_summation_by_parts(g, seed++) <= 1e-12);
  }
  for (int n : {4, 8, 16}) {
    auto g = build_grid<3>(n, 1.0);
    CHECK(check_summation_by_parts(g, seed++) <= 1e-12);
  }
}

TEST_CASE("operators are linear") {
  auto g = build_grid<2>(8, 1.0);
  const std::int64_t N = g.ncells;
  Rng rng(7);
  std::vector<double> v(N), w(N);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  for (auto& x : w) x = rng.uniform(-1.0, 1.0);
  const double a = 1.7, b = -0.3;
  std::vector<double> comb(N);
  for (std::int64_t c = 0; c < N; ++c) comb[c] = a * v[c] + b * w[c];

  auto gvc = grad_central(comb, g);
  auto gv = grad_central(v, g);
  auto gw = grad_central(w, g);
  auto lc = laplace_tight(comb, g);
  auto lv = laplace_tight(v, g);
  auto lw = laplace_tight(w, g);
  double worst = 0.0;
  for (std::size_t i = 0; i < gvc.size(); ++i)
    worst = std::max(worst, std::fabs(gvc[i] - (a * gv[i] + b * gw[i])));
  for (std::int64_t c = 0; c < N; ++c)
    worst = std::max(worst, std::fabs(lc[c] - (a * lv[c] + b * lw[c])) / 64.0);
  CHECK(worst <= 1e-13);
}

TEST_CASE("sparse matrix stencils agree with matrix-free kernels") {
  auto g = build_grid<2>(8, 1.0);
  const std::int64_t N = g.ncells;
  Rng rng(11);
  std::vector<double> v(N);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  Eigen::Map<const Eigen::VectorXd> vv(v.data(), N);

  for (int axis = 0; axis < 2; ++axis) {
    auto M = central_diff_matrix(g, axis);
    Eigen::VectorXd mv = M * vv;
    auto gc = grad_central(v, g);
    for (std::int64_t c = 0; c < N; ++c)
      CHECK(std::fabs(mv[c] - gc[static_cast<std::size_t>(axis) * N + c]) <= 1e-13);
  }
  auto L = laplace_matrix(g);
  Eigen::VectorXd lv = L * vv;
  auto lap = laplace_tight(v, g);
  for (std::int64_t c = 0; c < N; ++c) CHECK(std::fabs(lv[c] - lap[c]) <= 1e-11);
}

TEST_CASE("cell projection satisfies the Lipschitz stability bounds") {
  // For phi(x) = sin(2 pi x0) cos(2 pi x1): |grad phi| <= 2 pi everywhere.
  auto phi = [](const std::array<double, 2>& x) {
    return std::sin(2.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]);
  };
  const double lip = 2.0 * kPi;
  for (int n : {16, 32}) {
    auto g = build_grid<2>(n, 1.0);
    const std::int64_t N = g.ncells;
    auto ph = project_cells(phi, g);

    // Face jumps of the projection are bounded by h * Lip(phi).
    double max_jump = 0.0, max_dev = 0.0, max_facegrad = 0.0;
    auto gf = grad_faces(ph, g);
    for (std::size_t i = 0; i < gf.size(); ++i)
      max_facegrad = std::max(max_facegrad, std::fabs(gf[i]));
    for (int a = 0; a < 2; ++a)
      for (std::int64_t c = 0; c < N; ++c)
        max_jump = std::max(max_jump, std::fabs(ph[g.nbr[a][c]] - ph[c]));
    for (std::int64_t c = 0; c < N; ++c)
      max_dev = std::max(max_dev, std::fabs(ph[c] - phi(g.cell_center(c))));

    CHECK(max_jump <= 1.01 * g.h * lip);
    // Deviation from the pointwise value is bounded by sqrt(d) h Lip.
    CHECK(max_dev <= 1.01 * std::sqrt(2.0) * g.h * lip);
    // Directional difference quotients inherit the directional bound.
    CHECK(max_facegrad <= 1.01 * lip);
  }
}

TEST_CASE("central divergence of a projected field is second-order accurate") {
  auto vel = [](const std::array<double, 2>& x) {
    return std::array<double, 2>{std::sin(2.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]),
                                 std::cos(4.0 * kPi * x[1])};
  };
  auto div_exact = [](const std::array<double, 2>& x) {
    return 2.0 * kPi * std::cos(2.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]) -
           4.0 * kPi * std::sin(4.0 * kPi * x[1]);
  };
  std::array<double, 2> errs{};
  std::array<int, 2> ns{16, 32};
  for (int k = 0; k < 2; ++k) {
    auto g = build_grid<2>(ns[k], 1.0);
    auto u = project_velocity(vel, g);
    auto dv = div_central(u, g);
    std::vector<double> diff(g.ncells);
    for (std::int64_t c = 0; c < g.ncells; ++c)
      diff[c] = std::pow(dv[c] - div_exact(g.cell_center(c)), 2);
    errs[k] = std::sqrt(cell_integral(diff, g));
  }
  const double order = std::log2(errs[0] / errs[1]);
  CHECK(order >= 1.8);
  CHECK(order <= 2.2);
}

TEST_CASE("pairwise sums and the generator are deterministic") {
  Rng a(1234567);
  CHECK(a.next() == 6457827717110365317ull);
  CHECK(a.next() == 3203168211198807973ull);
  CHECK(a.next() == 9817491932198370423ull);
  Rng b(99);
  for (int i = 0; i < 1000; ++i) {
    double x = b.uniform();
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  Rng c1(5), c2(5);
  bool lo_seen = false, hi_seen = false;
  for (int i = 0; i < 200; ++i) {
    int v = c1.uniform_int(2, 4);
    CHECK(v == c2.uniform_int(2, 4));
    CHECK(v >= 2);
    CHECK(v <= 4);
    lo_seen |= (v == 2);
    hi_seen |= (v == 4);
  }
  CHECK(lo_seen);
  CHECK(hi_seen);

  std::vector<double> big(100000);
  Rng r(3);
  for (auto& x : big) x = r.uniform(-1.0, 1.0);
  const double s1 = pairwise_sum(big);
  const double s2 = pairwise_sum(big);
  CHECK(s1 == s2);
  long double ref = 0.0;
  for (double x : big) ref += static_cast<long double>(x);
  CHECK(std::fabs(s1 - static_cast<double>(ref)) <= 1e-10);

  // parallel_for does only disjoint writes, so thread count cannot matter.
  std::vector<double> y1(big.size()), y8(big.size());
  parallel_for(big.size(), 1, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) y1[i] = 2.0 * big[i] + 1.0;
  });
  parallel_for(big.size(), 8, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) y8[i] = 2.0 * big[i] + 1.0;
  });
  CHECK(y1 == y8);
}
