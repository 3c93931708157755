#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "nsfbox/field.hpp"
#include "nsfbox/grid.hpp"
#include "oracles/quadrature_oracle.hpp"

using namespace nsfbox;

namespace {

constexpr double kPi = 3.14159265358979323846;

double oracle_mean_2d(const std::function<double(std::array<double, 2>)>& f,
                      std::array<double, 2> lo, double h, int q) {
  auto f3 = [&f](const std::array<double, 3>& x) {
    return f({x[0], x[1]});
  };
  return oracle::cell_mean(f3, {lo[0], lo[1], 0.0}, h, 2, q);
}

double oracle_mean_3d(const std::function<double(std::array<double, 3>)>& f,
                      std::array<double, 3> lo, double h, int q) {
  auto f3 = [&f](const std::array<double, 3>& x) { return f(x); };
  return oracle::cell_mean(f3, lo, h, 3, q);
}

}  // namespace

TEST_CASE("tensor rule basics") {
  GaussCellRule rule;
  double wsum = 0.0;
  for (int i = 0; i < 4; ++i) wsum += rule.weight[i];
  CHECK(std::fabs(wsum - 1.0) <= 1e-15);
  CHECK(std::fabs(rule.node[0] + rule.node[3] - 1.0) <= 1e-15);
  CHECK(std::fabs(rule.node[1] + rule.node[2] - 1.0) <= 1e-15);
  for (int i = 0; i < 4; ++i) {
    CHECK(rule.node[i] > 0.0);
    CHECK(rule.node[i] < 1.0);
    CHECK(rule.weight[i] > 0.0);
  }
}

TEST_CASE("cell means are exact on polynomials through degree 7") {
  GaussCellRule rule;
  // mean of x^7 over [1/4, 1/2] = (b^8 - a^8) / (8 h), an exact rational.
  auto f7 = [](const std::array<double, 2>& x) { return std::pow(x[0], 7); };
  const double got = cell_mean<2>(f7, {0.25, 0.0}, 0.25, rule);
  CHECK(std::fabs(got - 0.00194549560546875) <= 1e-16);

  // Mixed monomial on a 3d cell with corner at the origin: mean of
  // x0^3 x1^5 x2^2 over [0, h]^3 is h^3/4 * h^5/6 * h^2/3.
  const double h = 0.5;
  auto fm = [](const std::array<double, 3>& x) {
    return std::pow(x[0], 3) * std::pow(x[1], 5) * x[2] * x[2];
  };
  const double want = (h * h * h / 4.0) * (std::pow(h, 5) / 6.0) * (h * h / 3.0);
  const double got3 = cell_mean<3>(fm, {0.0, 0.0, 0.0}, h, rule);
  CHECK(std::fabs(got3 - want) <= 1e-15 * std::fabs(want) + 1e-18);
}

TEST_CASE("cell means match a high-order reference rule") {
  GaussCellRule rule;
  auto smooth = [](std::array<double, 2> x) {
    return std::exp(x[0]) * (1.0 + 0.5 * x[1]) / (1.0 + x[0] * x[1]);
  };
  for (auto corner : {std::array<double, 2>{0.0, 0.0}, {0.25, 0.5}, {0.75, 0.25}}) {
    const double got = cell_mean<2>(smooth, corner, 0.25, rule);
    const double ref = oracle_mean_2d(smooth, corner, 0.25, 32);
    CHECK(std::fabs(got - ref) <= 1e-13);
  }
  auto smooth3 = [](std::array<double, 3> x) {
    return std::exp(0.5 * x[0] - 0.25 * x[2]) * (1.0 + x[1] * x[1]);
  };
  for (auto corner : {std::array<double, 3>{0.0, 0.0, 0.0}, {0.5, 0.25, 0.75}}) {
    const double got = cell_mean<3>(smooth3, corner, 0.25, rule);
    const double ref = oracle_mean_3d(smooth3, corner, 0.25, 32);
    CHECK(std::fabs(got - ref) <= 1e-13);
  }

  // An oscillatory field needs the fine grid before the fixed-order rule
  // matches the reference; at h = 1/16 both agree to round-off scale.
  auto wavy = [](std::array<double, 2> x) {
    return std::exp(std::sin(2.0 * kPi * x[0])) * std::cos(2.0 * kPi * x[1] + 0.3);
  };
  const double hh = 1.0 / 16.0;
  for (auto corner : {std::array<double, 2>{0.0, 0.0}, {5 * hh, 9 * hh}}) {
    const double got = cell_mean<2>(wavy, corner, hh, rule);
    const double ref = oracle_mean_2d(wavy, corner, hh, 32);
    CHECK(std::fabs(got - ref) <= 1e-10);
  }
}

TEST_CASE("constant fields project bitwise") {
  auto g = build_grid<2>(8, 1.0);
  const double c0 = 0.7301;
  auto ph = project_cells([&](const std::array<double, 2>&) { return c0; }, g);
  for (double v : ph) CHECK(v == c0);
  auto pp = project_cells([](const std::array<double, 2>&) { return kPi; }, g);
  for (double v : pp) CHECK(v == kPi);

  auto g3 = build_grid<3>(4, 1.0);
  auto u = project_velocity(
      [](const std::array<double, 3>&) {
        return std::array<double, 3>{1.5, -0.25, 0.0};
      },
      g3);
  const std::int64_t N = g3.ncells;
  for (std::int64_t c = 0; c < N; ++c) {
    CHECK(u[c] == 1.5);
    CHECK(u[N + c] == -0.25);
    CHECK(u[2 * N + c] == 0.0);
  }
}

TEST_CASE("velocity projection matches componentwise scalar projection") {
  auto g = build_grid<2>(8, 1.0);
  auto vel = [](const std::array<double, 2>& x) {
    return std::array<double, 2>{std::sin(2.0 * kPi * x[0]), x[0] * x[1]};
  };
  auto u = project_velocity(vel, g);
  auto u0 = project_cells([&](const std::array<double, 2>& x) { return vel(x)[0]; }, g);
  auto u1 = project_cells([&](const std::array<double, 2>& x) { return vel(x)[1]; }, g);
  const std::int64_t N = g.ncells;
  for (std::int64_t c = 0; c < N; ++c) {
    CHECK(u[c] == u0[c]);
    CHECK(u[N + c] == u1[c]);
  }
}

TEST_CASE("face trace helpers and the dissipative flux") {
  CHECK(face_avg(1.0, 3.0) == 2.0);
  CHECK(face_jump(1.0, 3.0) == 2.0);
  CHECK(upwind_is_in(0.0));
  CHECK(upwind_value(5.0, 7.0, 0.0) == 5.0);
  CHECK(upwind_value(5.0, 7.0, -1.0) == 7.0);
  CHECK(downwind_value(5.0, 7.0, 2.0) == 7.0);
  // rho_in = 2, rho_out = 1.2, ubar = 1, halpha = 1: F = 2*1 - 1*(-0.8) = 2.8;
  // with ubar = -1: F = 1.2*(-1) - (-0.8) = -0.4.
  CHECK(dissipative_flux(2.0, 1.2, 1.0, 1.0) == 2.8);
  CHECK(dissipative_flux(2.0, 1.2, -1.0, 1.0) == Catch::Approx(-0.4).margin(1e-15));
  // Zero stabilization reduces to pure upwind transport.
  CHECK(dissipative_flux(2.0, 1.2, 1.5, 0.0) == 3.0);
  CHECK(dissipative_flux(2.0, 1.2, 0.0, 0.5) == 0.4);
}
