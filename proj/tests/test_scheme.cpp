#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Sparse>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "nsfbox/geometry.hpp"
#include "nsfbox/grid.hpp"
#include "nsfbox/mask.hpp"
#include "nsfbox/scheme.hpp"
#include "nsfbox/util.hpp"
#include "oracles/fd_jacobian_oracle.hpp"
#include "oracles/scalar_penalty_oracle.hpp"
#include "oracles/weakform_oracle.hpp"

using namespace nsfbox;

namespace {

constexpr double kPi = 3.14159265358979323846;

// The assembler consults only the fluid flag, so a hand-built mask lets the
// cross-checks run on arbitrary solid patterns, not just resolved shapes.
template <int D>
DomainMask<D> mask_from_flags(std::vector<std::uint8_t> fluid) {
  DomainMask<D> m;
  m.is_fluid = std::move(fluid);
  for (std::size_t c = 0; c < m.is_fluid.size(); ++c) {
    if (m.is_fluid[c])
      ++m.n_fluid;
    else {
      ++m.n_solid;
      m.solid_cells.push_back(static_cast<std::int32_t>(c));
    }
  }
  return m;
}

template <int D>
State<D> random_state(const Grid<D>& g, Rng& rng) {
  State<D> st;
  st.rho.resize(g.ncells);
  st.u.resize(static_cast<std::size_t>(D) * g.ncells);
  st.th.resize(g.ncells);
  for (auto& v : st.rho) v = rng.uniform(0.5, 2.0);
  for (auto& v : st.u) v = rng.uniform(-1.0, 1.0);
  for (auto& v : st.th) v = rng.uniform(0.5, 2.0);
  return st;
}

template <int D>
std::vector<double> pack_state(const State<D>& st) {
  const std::size_t N = st.rho.size();
  std::vector<double> x((2 + D) * N);
  for (std::size_t c = 0; c < N; ++c) x[c] = st.rho[c];
  for (std::size_t i = 0; i < D * N; ++i) x[N + i] = st.u[i];
  for (std::size_t c = 0; c < N; ++c) x[(1 + D) * N + c] = st.th[c];
  return x;
}

template <int D>
State<D> unpack_state(const std::vector<double>& x, std::int64_t N) {
  State<D> st;
  st.rho.assign(x.begin(), x.begin() + N);
  st.u.assign(x.begin() + N, x.begin() + (1 + D) * N);
  st.th.assign(x.begin() + (1 + D) * N, x.end());
  return st;
}

// Weighted row sums of the production residual must reproduce the
// independently coded weak-form residuals for every test function.
template <int D>
void check_weakform_agreement(int n, double alpha, double lambda, std::uint64_t seed) {
  auto g = build_grid<D>(n, 1.0);
  const std::int64_t N = g.ncells;
  Rng rng(seed);

  std::vector<std::uint8_t> fluid(N);
  for (auto& f : fluid) f = rng.uniform() < 0.6 ? 1 : 0;
  fluid[0] = 1;
  fluid[1] = 0;
  auto m = mask_from_flags<D>(fluid);

  SchemeParams par;
  par.alpha = alpha;
  par.lambda = lambda;
  std::vector<double> thB(N);
  for (auto& v : thB) v = rng.uniform(0.5, 1.5);

  auto nw = random_state<D>(g, rng);
  auto od = random_state<D>(g, rng);
  SchemeScratch<D> scr;
  assemble_residual(nw, od, par, g, m, thB, scr);

  oracle::WeakParams P;
  P.dim = D;
  P.n = n;
  P.h = g.h;
  P.dt = par.dt;
  P.eps = par.eps;
  P.alpha = par.alpha;
  P.mu = par.mu;
  P.lambda = par.lambda;
  P.kappa = par.kappa;
  P.cv = par.gas.cv;
  oracle::WeakState wnw{nw.rho, nw.u, nw.th}, wod{od.rho, od.u, od.th};
  std::vector<char> solid(N);
  for (std::int64_t c = 0; c < N; ++c) solid[c] = fluid[c] ? 0 : 1;
  std::vector<double> phi(N), Phi(static_cast<std::size_t>(D) * N), psi(N);
  for (auto& v : phi) v = rng.uniform(-1.0, 1.0);
  for (auto& v : Phi) v = rng.uniform(-1.0, 1.0);
  for (auto& v : psi) v = rng.uniform(-1.0, 1.0);

  auto W = oracle::weakform_eval(P, wnw, wod, thB, solid, phi, Phi, psi);

  const double w = g.cell_volume() / par.dt;
  double cont = 0.0, mom = 0.0, en = 0.0;
  for (std::int64_t c = 0; c < N; ++c) cont += w * scr.R[c] * phi[c];
  for (int j = 0; j < D; ++j)
    for (std::int64_t c = 0; c < N; ++c)
      mom += w * scr.R[(1 + static_cast<std::size_t>(j)) * N + c] *
             Phi[static_cast<std::size_t>(j) * N + c];
  for (std::int64_t c = 0; c < N; ++c)
    en += w * scr.R[(1 + static_cast<std::size_t>(D)) * N + c] * psi[c];

  CHECK(std::fabs(cont - W.cont) <= 1e-12 * std::max(1.0, std::fabs(W.cont)));
  CHECK(std::fabs(mom - W.mom) <= 1e-12 * std::max(1.0, std::fabs(W.mom)));
  CHECK(std::fabs(en - W.en) <= 1e-12 * std::max(1.0, std::fabs(W.en)));
}

}  // namespace

TEST_CASE("residual rows match the independent weak-form evaluator") {
  check_weakform_agreement<2>(4, 0.0, 0.0, 2001);
  check_weakform_agreement<2>(4, 0.5, 0.05, 2002);
  check_weakform_agreement<2>(8, 0.0, 0.1, 2003);
  check_weakform_agreement<3>(4, 0.0, 0.0, 2004);
  check_weakform_agreement<3>(4, 0.5, 0.05, 2005);
}

TEST_CASE("analytic Jacobian matches finite differences") {
  constexpr int D = 2;
  auto g = build_grid<D>(4, 1.0);
  const std::int64_t N = g.ncells;
  Rng rng(3101);

  std::vector<std::uint8_t> fluid(N);
  for (auto& f : fluid) f = rng.uniform() < 0.5 ? 1 : 0;
  fluid[0] = 1;
  fluid[5] = 0;
  auto m = mask_from_flags<D>(fluid);

  SchemeParams par;
  par.lambda = 0.05;
  par.alpha = 0.5;
  std::vector<double> thB(N, 1.0);
  auto st = random_state<D>(g, rng);
  auto od = random_state<D>(g, rng);
  st.th[3] = -0.4;  // transient iterates may dip below zero; the clamped
                    // pressure branch must differentiate consistently too

  SchemeScratch<D> scr;
  oracle::ResidualFn F = [&](const std::vector<double>& xv) {
    auto y = unpack_state<D>(xv, N);
    assemble_residual(y, od, par, g, m, thB, scr);
    return scr.R;
  };
  auto xv = pack_state<D>(st);
  auto Jfd = oracle::fd_jacobian(F, xv);

  std::vector<Eigen::Triplet<double>> trip;
  assemble_jacobian(st, par, g, m, thB, trip);
  const int M = static_cast<int>((2 + D) * N);
  Eigen::SparseMatrix<double> J(M, M);
  J.setFromTriplets(trip.begin(), trip.end());
  Eigen::MatrixXd Jd = Eigen::MatrixXd(J);

  double worst = 0.0;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) {
      const double fd = Jfd[static_cast<std::size_t>(i) * M + j];
      worst = std::max(worst, std::fabs(Jd(i, j) - fd) / std::max(1.0, std::fabs(fd)));
    }
  CHECK(worst <= 1e-5);
}

TEST_CASE("all-solid constant state relaxes at the closed-form scalar rate") {
  constexpr int D = 2;
  auto g = build_grid<D>(4, 1.0);
  const std::int64_t N = g.ncells;
  auto m = split_domain(g, make_empty<2>(1.0));
  REQUIRE(m.n_solid == N);

  SchemeParams par;  // dt = 1e-3, eps = 1e-2, cv = 2.5
  const double rho0 = 1.7, th0 = 2.2, thB = 1.3;
  const std::array<double, 2> u0{0.8, -0.5};
  std::vector<double> wall(N, thB);

  State<D> st;
  st.rho.assign(N, rho0);
  st.th.assign(N, th0);
  st.u.resize(2 * N);
  for (std::int64_t c = 0; c < N; ++c) {
    st.u[c] = u0[0];
    st.u[N + c] = u0[1];
  }

  NewtonWorkspace<D> ws;
  double eu0 = u0[0], eu1 = u0[1], eth = th0;
  for (int step = 0; step < 3; ++step) {
    auto stats = advance_step(st, par, g, m, wall, ws);
    REQUIRE(stats.converged);
    CHECK(stats.failure == StepFailure::None);
    eu0 = oracle::penalty_velocity_step(eu0, rho0, par.dt, par.eps);
    eu1 = oracle::penalty_velocity_step(eu1, rho0, par.dt, par.eps);
    eth = oracle::penalty_temperature_step(eth, thB, rho0, par.gas.cv, par.dt, par.eps);
    for (std::int64_t c = 0; c < N; ++c) {
      CHECK(std::fabs(st.rho[c] - rho0) <= 1e-10);
      CHECK(std::fabs(st.u[c] - eu0) <= 1e-10);
      CHECK(std::fabs(st.u[N + c] - eu1) <= 1e-10);
      CHECK(std::fabs(st.th[c] - eth) <= 1e-10);
    }
  }
  CHECK(st.t == Catch::Approx(3e-3).epsilon(1e-12));

  // The scalar kinetic-energy identity holds exactly for the closed form.
  const double v1 = oracle::penalty_velocity_step(0.8, rho0, par.dt, par.eps);
  const double lhs = oracle::penalty_energy_lhs(0.8, v1, rho0, par.dt, par.eps);
  const double rhs = oracle::penalty_energy_rhs(0.8, v1, rho0, par.dt);
  CHECK(std::fabs(lhs - rhs) <= 1e-9 * std::max(1.0, std::fabs(lhs)));
}

TEST_CASE("solver converges on smooth fluid data and reports failures honestly") {
  constexpr int D = 2;
  auto g = build_grid<D>(8, 1.0);
  const std::int64_t N = g.ncells;
  auto m = split_domain(g, make_full<2>(1.0));
  std::vector<double> wall(N, 1.0);

  State<D> st;
  st.rho.resize(N);
  st.u.resize(2 * N);
  st.th.resize(N);
  for (std::int64_t c = 0; c < N; ++c) {
    auto x = g.cell_center(c);
    st.rho[c] = 1.0 + 0.3 * std::sin(2.0 * kPi * x[0]) * std::cos(2.0 * kPi * x[1]);
    st.u[c] = 0.4 * std::sin(2.0 * kPi * x[1]);
    st.u[N + c] = -0.2 * std::cos(2.0 * kPi * x[0]);
    st.th[c] = 1.0 + 0.2 * std::cos(2.0 * kPi * x[0]);
  }

  SchemeParams par;
  NewtonWorkspace<D> ws;
  auto probe = st;
  {
    SchemeParams starved = par;
    starved.max_newton = 0;
    NewtonWorkspace<D> ws0;
    auto stats = advance_step(probe, starved, g, m, wall, ws0);
    CHECK_FALSE(stats.converged);
    CHECK(stats.failure == StepFailure::NoConvergence);
    CHECK(probe.t == st.t);  // failed step leaves the state untouched
    CHECK(probe.rho == st.rho);
    CHECK(probe.u == st.u);
    CHECK(probe.th == st.th);
  }

  auto stats = advance_step(st, par, g, m, wall, ws);
  REQUIRE(stats.converged);
  CHECK(stats.failure == StepFailure::None);
  CHECK(stats.iterations >= 1);
  CHECK(stats.iterations < par.max_newton);
  CHECK(stats.residual <= par.tol_newton);
  for (std::int64_t c = 0; c < N; ++c) {
    CHECK(st.rho[c] > 0.0);
    CHECK(st.th[c] > 0.0);
  }

  // A second step reuses the factorization unless contraction degraded.
  auto stats2 = advance_step(st, par, g, m, wall, ws);
  REQUIRE(stats2.converged);
  CHECK(ws.total_factorizations >= 1);

  CHECK_THROWS_AS(
      [&] {
        SchemeParams bad = par;
        bad.dt = 0.0;
        advance_step(st, bad, g, m, wall, ws);
      }(),
      std::invalid_argument);
}

TEST_CASE("time step is bitwise reproducible across thread counts") {
  constexpr int D = 2;
  const int n = 48;  // large enough that the element loops actually split
  auto g = build_grid<D>(n, 1.0);
  const std::int64_t N = g.ncells;
  auto shape = make_ball<2>(1.0, {0.5, 0.5}, 0.3);
  auto m = split_domain(g, shape);
  std::vector<double> wall(N, 1.0);

  auto init = [&]() {
    State<D> st;
    st.rho.resize(N);
    st.u.resize(2 * N);
    st.th.resize(N);
    for (std::int64_t c = 0; c < N; ++c) {
      auto x = g.cell_center(c);
      st.rho[c] = 1.0 + 0.2 * std::sin(2.0 * kPi * x[0]);
      st.u[c] = 0.3 * std::sin(2.0 * kPi * x[1]);
      st.u[N + c] = -0.3 * std::cos(2.0 * kPi * x[0]);
      st.th[c] = 1.0 + 0.1 * std::cos(2.0 * kPi * (x[0] + x[1]));
    }
    return st;
  };

  auto run_one = [&](int threads) {
    State<D> st = init();
    SchemeParams par;
    par.threads = threads;
    NewtonWorkspace<D> ws;
    auto stats = advance_step(st, par, g, m, wall, ws);
    REQUIRE(stats.converged);
    return st;
  };
  auto s1 = run_one(1);
  auto s8 = run_one(8);
  CHECK(s1.rho == s8.rho);
  CHECK(s1.u == s8.u);
  CHECK(s1.th == s8.th);
}
