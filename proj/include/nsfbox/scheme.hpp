#ifndef NSFBOX_SCHEME_HPP
#define NSFBOX_SCHEME_HPP

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "eos.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "mask.hpp"
#include "util.hpp"

namespace nsfbox {

// One time level of the discrete solution. Velocity is component-major.
template <int D>
struct State {
  double t = 0.0;
  std::vector<double> rho;
  std::vector<double> u;   // size D*N, u[j*N + c]
  std::vector<double> th;  // temperature
};

struct SchemeParams {
  double dt = 1e-3;
  double eps = 1e-2;     // penalty strength
  double alpha = 0.0;    // exponent of the h^alpha jump diffusion, must be > -1
  double mu = 0.1;       // shear viscosity, > 0
  double lambda = 0.0;   // bulk contribution, mu + lambda >= 0
  double kappa = 0.1;    // heat conduction, > 0
  GasLaw gas = GasLaw::make(1.4);
  double tol_newton = 1e-11;
  int max_newton = 40;
  int threads = 1;

  void check() const {
    if (!(dt > 0.0)) throw std::invalid_argument("scheme: dt must be positive");
    if (!(eps > 0.0)) throw std::invalid_argument("scheme: eps must be positive");
    if (!(alpha > -1.0)) throw std::invalid_argument("scheme: alpha must exceed -1");
    if (!(mu > 0.0)) throw std::invalid_argument("scheme: mu must be positive");
    if (!(mu + lambda >= 0.0)) throw std::invalid_argument("scheme: mu + lambda must be nonnegative");
    if (!(kappa > 0.0)) throw std::invalid_argument("scheme: kappa must be positive");
    if (!(tol_newton > 0.0)) throw std::invalid_argument("scheme: tol_newton must be positive");
  }
};

enum class StepFailure { None, NoConvergence, PositivityLost };

struct StepStats {
  int iterations = 0;
  int factorizations = 0;
  double residual = 0.0;  // scaled max-norm of the accepted iterate
  bool converged = false;
  StepFailure failure = StepFailure::None;
};

// Unknown ordering within the Newton system: [rho | u_0 .. u_{D-1} | theta],
// each block of size N, matching the residual row ordering.
template <int D>
struct SchemeScratch {
  std::vector<double> p, divu, gradu, stress;        // cell quantities; stress = S - p I
  std::vector<double> ubar, fr, fm, fe;              // face quantities
  std::vector<double> R;
  void resize(std::int64_t N) {
    p.resize(N);
    divu.resize(N);
    gradu.resize(static_cast<std::size_t>(D) * D * N);
    stress.resize(static_cast<std::size_t>(D) * D * N);
    ubar.resize(static_cast<std::size_t>(D) * N);
    fr.resize(static_cast<std::size_t>(D) * N);
    fm.resize(static_cast<std::size_t>(D) * D * N);
    fe.resize(static_cast<std::size_t>(D) * N);
    R.resize(static_cast<std::size_t>(2 + D) * N);
  }
};

// Residual of the fully implicit update, rows premultiplied by dt so each row
// is an increment balance on one cell:
//   mass:     (rho - rho_o)                + (dt/h) div_up
//   momentum: (rho u_j - rho_o u_o_j)      + (dt/h) div_up + (dt/eps) 1_s u_j
//                                          - dt (central div of S - pI)_j
//   energy:   cv (rho th - rho_o th_o)     + cv (dt/h) div_up
//                                          - dt kappa lap(th)
//                                          + (dt/eps) 1_s (th - th_wall)
//                                          - dt (S - pI):grad u
// Upwinding resolves ties (zero face-normal velocity) to the in-cell trace.
template <int D>
void assemble_residual(const State<D>& x, const State<D>& old, const SchemeParams& par,
                       const Grid<D>& g, const DomainMask<D>& mask,
                       const std::vector<double>& theta_wall, SchemeScratch<D>& s) {
  const std::int64_t N = g.ncells;
  const double h = g.h;
  const double inv2h = 1.0 / (2.0 * h);
  const double invh2 = 1.0 / (h * h);
  const double halpha = std::pow(h, par.alpha);
  const double dt = par.dt;
  const double cv = par.gas.cv;
  const std::size_t uN = static_cast<std::size_t>(N);

  s.resize(N);

  // Cell-local quantities: pressure, velocity gradient, stress.
  parallel_for(uN, par.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      s.p[c] = par.gas.pressure(x.rho[c], x.th[c]);
      double div = 0.0;
      for (int j = 0; j < D; ++j)
        for (int a = 0; a < D; ++a) {
          const double* uj = x.u.data() + static_cast<std::size_t>(j) * N;
          double gja = (uj[g.nbr[a][c]] - uj[g.nbr_m[a][c]]) * inv2h;
          s.gradu[(static_cast<std::size_t>(j) * D + a) * N + c] = gja;
          if (j == a) div += gja;
        }
      s.divu[c] = div;
      for (int j = 0; j < D; ++j)
        for (int a = 0; a < D; ++a) {
          double sym = s.gradu[(static_cast<std::size_t>(j) * D + a) * N + c] +
                       s.gradu[(static_cast<std::size_t>(a) * D + j) * N + c];
          double t = par.mu * sym;
          if (j == a) t += par.lambda * div - s.p[c];
          s.stress[(static_cast<std::size_t>(j) * D + a) * N + c] = t;
        }
    }
  });

  // Face fluxes.
  for (int a = 0; a < D; ++a) {
    const double* ua = x.u.data() + static_cast<std::size_t>(a) * N;
    parallel_for(uN, par.threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t c = lo; c < hi; ++c) {
        const std::int64_t o = g.nbr[a][c];
        const std::size_t f = static_cast<std::size_t>(a) * N + c;
        const double ub = 0.5 * (ua[c] + ua[o]);
        s.ubar[f] = ub;
        const bool in = upwind_is_in(ub);
        const std::int64_t up = in ? static_cast<std::int64_t>(c) : o;
        s.fr[f] = x.rho[up] * ub - halpha * (x.rho[o] - x.rho[c]);
        for (int j = 0; j < D; ++j) {
          const double* uj = x.u.data() + static_cast<std::size_t>(j) * N;
          s.fm[(static_cast<std::size_t>(j) * D + a) * N + c] =
              x.rho[up] * uj[up] * ub - halpha * (x.rho[o] * uj[o] - x.rho[c] * uj[c]);
        }
        s.fe[f] = x.rho[up] * x.th[up] * ub - halpha * (x.rho[o] * x.th[o] - x.rho[c] * x.th[c]);
      }
    });
  }

  // Rows.
  const double dfac = dt / h;
  parallel_for(uN, par.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t c = lo; c < hi; ++c) {
      const bool solid = mask.solid(static_cast<std::int64_t>(c));
      const double pen = solid ? dt / par.eps : 0.0;

      double rr = x.rho[c] - old.rho[c];
      for (int a = 0; a < D; ++a) {
        const std::size_t cm = static_cast<std::size_t>(g.nbr_m[a][c]);
        rr += dfac * (s.fr[static_cast<std::size_t>(a) * N + c] -
                      s.fr[static_cast<std::size_t>(a) * N + cm]);
      }
      s.R[c] = rr;

      for (int j = 0; j < D; ++j) {
        const double* uj = x.u.data() + static_cast<std::size_t>(j) * N;
        const double* uoj = old.u.data() + static_cast<std::size_t>(j) * N;
        double rm = x.rho[c] * uj[c] - old.rho[c] * uoj[c] + pen * uj[c];
        for (int a = 0; a < D; ++a) {
          const std::size_t cm = static_cast<std::size_t>(g.nbr_m[a][c]);
          rm += dfac * (s.fm[(static_cast<std::size_t>(j) * D + a) * N + c] -
                        s.fm[(static_cast<std::size_t>(j) * D + a) * N + cm]);
        }
        double divT = 0.0;
        for (int l = 0; l < D; ++l) {
          const std::size_t cp = static_cast<std::size_t>(g.nbr[l][c]);
          const std::size_t cm = static_cast<std::size_t>(g.nbr_m[l][c]);
          divT += (s.stress[(static_cast<std::size_t>(j) * D + l) * N + cp] -
                   s.stress[(static_cast<std::size_t>(j) * D + l) * N + cm]) *
                  inv2h;
        }
        rm -= dt * divT;
        s.R[(1 + static_cast<std::size_t>(j)) * N + c] = rm;
      }

      double re = cv * (x.rho[c] * x.th[c] - old.rho[c] * old.th[c]);
      for (int a = 0; a < D; ++a) {
        const std::size_t cm = static_cast<std::size_t>(g.nbr_m[a][c]);
        re += cv * dfac * (s.fe[static_cast<std::size_t>(a) * N + c] -
                           s.fe[static_cast<std::size_t>(a) * N + cm]);
      }
      double lap = 0.0;
      for (int a = 0; a < D; ++a)
        lap += (x.th[g.nbr[a][c]] - 2.0 * x.th[c] + x.th[g.nbr_m[a][c]]) * invh2;
      re -= dt * par.kappa * lap;
      re += pen * (x.th[c] - theta_wall[c]);
      double prod = 0.0;
      for (int j = 0; j < D; ++j)
        for (int a = 0; a < D; ++a)
          prod += s.stress[(static_cast<std::size_t>(j) * D + a) * N + c] *
                  s.gradu[(static_cast<std::size_t>(j) * D + a) * N + c];
      re -= dt * prod;
      s.R[(1 + static_cast<std::size_t>(D)) * N + c] = re;
    }
  });
}

// Analytic Jacobian of assemble_residual, assembled as triplets in a fixed
// serial order. Upwind branches use the one-sided derivative selected by the
// current iterate, as does the pressure clamp of the extended gas law.
template <int D>
void assemble_jacobian(const State<D>& x, const SchemeParams& par, const Grid<D>& g,
                       const DomainMask<D>& mask, const std::vector<double>& /*theta_wall*/,
                       std::vector<Eigen::Triplet<double>>& trip) {
  const std::int64_t N = g.ncells;
  const double h = g.h;
  const double inv2h = 1.0 / (2.0 * h);
  const double invh2 = 1.0 / (h * h);
  const double halpha = std::pow(h, par.alpha);
  const double dt = par.dt;
  const double cv = par.gas.cv;
  const double dfac = dt / h;

  trip.clear();
  const auto I_rho = [&](std::int64_t c) { return static_cast<int>(c); };
  const auto I_u = [&](int j, std::int64_t c) { return static_cast<int>((1 + j) * N + c); };
  const auto I_th = [&](std::int64_t c) { return static_cast<int>((1 + D) * N + c); };
  const auto add = [&](int r, int c, double v) {
    if (v != 0.0) trip.emplace_back(r, c, v);
  };

  for (std::int64_t c = 0; c < N; ++c) {
    const bool solid = mask.solid(c);
    const double pen = solid ? dt / par.eps : 0.0;
    add(I_rho(c), I_rho(c), 1.0);
    for (int j = 0; j < D; ++j) {
      add(I_u(j, c), I_rho(c), x.u[static_cast<std::size_t>(j) * N + c]);
      add(I_u(j, c), I_u(j, c), x.rho[c] + pen);
    }
    add(I_th(c), I_rho(c), cv * x.th[c]);
    add(I_th(c), I_th(c), cv * x.rho[c] + pen + dt * par.kappa * 2.0 * D * invh2);
    for (int a = 0; a < D; ++a) {
      add(I_th(c), I_th(g.nbr[a][c]), -dt * par.kappa * invh2);
      add(I_th(c), I_th(g.nbr_m[a][c]), -dt * par.kappa * invh2);
    }
  }

  // Convective fluxes: each face contributes +dF to its in-cell row and -dF
  // to its out-cell row.
  for (int a = 0; a < D; ++a) {
    const double* ua = x.u.data() + static_cast<std::size_t>(a) * N;
    for (std::int64_t c = 0; c < N; ++c) {
      const std::int64_t o = g.nbr[a][c];
      const double ub = 0.5 * (ua[c] + ua[o]);
      const bool in = upwind_is_in(ub);
      const std::int64_t up = in ? c : o;

      const auto face_rows = [&](int row_in, int row_out, double scale, double d_rho_in,
                                 double d_rho_out, double d_self_in, double d_self_out,
                                 int self_block_j, double d_ua) {
        // d_ua acts through ubar = (u_a[c]+u_a[o])/2 on both cells.
        const int col_rin = I_rho(c), col_rout = I_rho(o);
        add(row_in, col_rin, scale * d_rho_in);
        add(row_in, col_rout, scale * d_rho_out);
        add(row_out, col_rin, -scale * d_rho_in);
        add(row_out, col_rout, -scale * d_rho_out);
        if (self_block_j >= 0) {
          add(row_in, I_u(self_block_j, c), scale * d_self_in);
          add(row_in, I_u(self_block_j, o), scale * d_self_out);
          add(row_out, I_u(self_block_j, c), -scale * d_self_in);
          add(row_out, I_u(self_block_j, o), -scale * d_self_out);
        } else if (self_block_j == -2) {  // theta block
          add(row_in, I_th(c), scale * d_self_in);
          add(row_in, I_th(o), scale * d_self_out);
          add(row_out, I_th(c), -scale * d_self_in);
          add(row_out, I_th(o), -scale * d_self_out);
        }
        add(row_in, I_u(a, c), scale * 0.5 * d_ua);
        add(row_in, I_u(a, o), scale * 0.5 * d_ua);
        add(row_out, I_u(a, c), -scale * 0.5 * d_ua);
        add(row_out, I_u(a, o), -scale * 0.5 * d_ua);
      };

      // Mass flux: r = rho.
      face_rows(I_rho(c), I_rho(o), dfac, (in ? ub : 0.0) + halpha, (in ? 0.0 : ub) - halpha,
                0.0, 0.0, -1, x.rho[up]);

      // Momentum fluxes: r = rho u_j.
      for (int j = 0; j < D; ++j) {
        const double* uj = x.u.data() + static_cast<std::size_t>(j) * N;
        const double r_up = x.rho[up] * uj[up];
        face_rows(I_u(j, c), I_u(j, o), dfac,
                  (in ? uj[c] * ub : 0.0) + halpha * uj[c],
                  (in ? 0.0 : uj[o] * ub) - halpha * uj[o],
                  (in ? x.rho[c] * ub : 0.0) + halpha * x.rho[c],
                  (in ? 0.0 : x.rho[o] * ub) - halpha * x.rho[o], j, r_up);
      }

      // Energy flux: r = rho th, scaled by cv.
      face_rows(I_th(c), I_th(o), cv * dfac,
                (in ? x.th[c] * ub : 0.0) + halpha * x.th[c],
                (in ? 0.0 : x.th[o] * ub) - halpha * x.th[o],
                (in ? x.rho[c] * ub : 0.0) + halpha * x.rho[c],
                (in ? 0.0 : x.rho[o] * ub) - halpha * x.rho[o], -2,
                x.rho[up] * x.th[up]);
    }
  }

  // Stress divergence and production. T_jl(C) = mu (G_jl + G_lj) + delta_jl
  // (lambda div - p) evaluated at cell C; the momentum row at c sees
  // -dt (T_jl(c+l) - T_jl(c-l)) / 2h.
  for (std::int64_t c = 0; c < N; ++c) {
    for (int j = 0; j < D; ++j) {
      for (int l = 0; l < D; ++l) {
        for (int sgn = 0; sgn < 2; ++sgn) {
          const std::int64_t C = sgn == 0 ? g.nbr[l][c] : g.nbr_m[l][c];
          const double w = -dt * (sgn == 0 ? 1.0 : -1.0) * inv2h;
          // dT_jl(C)/du_j[C +- l] and /du_l[C +- j]
          add(I_u(j, c), I_u(j, g.nbr[l][C]), w * par.mu * inv2h * 2.0 * (j == l ? 1.0 : 0.5));
          add(I_u(j, c), I_u(j, g.nbr_m[l][C]), -w * par.mu * inv2h * 2.0 * (j == l ? 1.0 : 0.5));
          if (j != l) {
            add(I_u(j, c), I_u(l, g.nbr[j][C]), w * par.mu * inv2h);
            add(I_u(j, c), I_u(l, g.nbr_m[j][C]), -w * par.mu * inv2h);
          }
          if (j == l) {
            for (int m = 0; m < D; ++m) {
              add(I_u(j, c), I_u(m, g.nbr[m][C]), w * par.lambda * inv2h);
              add(I_u(j, c), I_u(m, g.nbr_m[m][C]), -w * par.lambda * inv2h);
            }
            const double dpr = x.th[C] > 0.0 ? x.th[C] : 0.0;
            const double dpt = x.th[C] > 0.0 ? x.rho[C] : 0.0;
            add(I_u(j, c), I_rho(C), -w * dpr);
            add(I_u(j, c), I_th(C), -w * dpt);
          }
        }
      }
    }
  }

  for (std::int64_t c = 0; c < N; ++c) {
    // Production P(c) = sum_ab T_ab G_ab; dP/dG_ab = 2 S_ab - p delta_ab.
    double G[D][D];
    double div = 0.0;
    for (int j = 0; j < D; ++j) {
      const double* uj = x.u.data() + static_cast<std::size_t>(j) * N;
      for (int a = 0; a < D; ++a) {
        G[j][a] = (uj[g.nbr[a][c]] - uj[g.nbr_m[a][c]]) * inv2h;
        if (j == a) div += G[j][a];
      }
    }
    const double p = par.gas.pressure(x.rho[c], x.th[c]);
    for (int a = 0; a < D; ++a)
      for (int b = 0; b < D; ++b) {
        double S_ab = par.mu * (G[a][b] + G[b][a]) + (a == b ? par.lambda * div : 0.0);
        double dPdG = 2.0 * S_ab - (a == b ? p : 0.0);
        add(I_th(c), I_u(a, g.nbr[b][c]), -dt * dPdG * inv2h);
        add(I_th(c), I_u(a, g.nbr_m[b][c]), dt * dPdG * inv2h);
      }
    const double dpr = x.th[c] > 0.0 ? x.th[c] : 0.0;
    const double dpt = x.th[c] > 0.0 ? x.rho[c] : 0.0;
    add(I_th(c), I_rho(c), dt * dpr * div);
    add(I_th(c), I_th(c), dt * dpt * div);
  }
}

template <int D>
struct NewtonWorkspace {
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::SparseMatrix<double> J;
  std::vector<Eigen::Triplet<double>> trip;
  SchemeScratch<D> scr;
  bool factored = false;
  int age = 0;  // accepted Newton steps since the last factorization
  long total_factorizations = 0;
};

namespace detail {

inline double linf(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::fabs(x));
  return m;
}

template <int D>
double residual_scale(const State<D>& old, double cv) {
  double s = 1.0;
  const std::size_t N = old.rho.size();
  for (std::size_t c = 0; c < N; ++c) {
    s = std::max(s, std::fabs(old.rho[c]));
    s = std::max(s, cv * std::fabs(old.rho[c] * old.th[c]));
    for (int j = 0; j < D; ++j)
      s = std::max(s, std::fabs(old.rho[c] * old.u[static_cast<std::size_t>(j) * N + c]));
  }
  return s;
}

}  // namespace detail

// One implicit step. On success `state` is replaced by the new time level.
// Newton iterates until the scaled residual is well below tol_newton (it
// keeps polishing while progress lasts, so balance checks see residuals near
// the rounding floor, not near the tolerance). Damping halves the step to
// keep rho positive and the residual decreasing; the factorization is reused
// across iterations and steps until contraction degrades.
template <int D>
StepStats advance_step(State<D>& state, const SchemeParams& par, const Grid<D>& g,
                       const DomainMask<D>& mask, const std::vector<double>& theta_wall,
                       NewtonWorkspace<D>& ws) {
  par.check();
  const std::int64_t N = g.ncells;
  const std::size_t M = static_cast<std::size_t>(2 + D) * N;
  const double scale = detail::residual_scale<D>(state, par.gas.cv);
  const double tol = par.tol_newton;
  const double polish = 0.02 * tol;
  constexpr double kMinDamping = 9.5367431640625e-07;  // 2^-20

  StepStats stats;
  const State<D> old = state;
  State<D> x = state;

  const auto eval = [&](const State<D>& y) {
    assemble_residual(y, old, par, g, mask, theta_wall, ws.scr);
    return detail::linf(ws.scr.R) / scale;
  };

  const auto refactor = [&](const State<D>& y) {
    assemble_jacobian(y, par, g, mask, theta_wall, ws.trip);
    ws.J.resize(static_cast<int>(M), static_cast<int>(M));
    ws.J.setFromTriplets(ws.trip.begin(), ws.trip.end());
    if (!ws.factored) ws.lu.analyzePattern(ws.J);
    ws.lu.factorize(ws.J);
    if (ws.lu.info() != Eigen::Success) throw std::runtime_error("newton: factorization failed");
    ws.factored = true;
    ws.age = 0;
    ++ws.total_factorizations;
    ++stats.factorizations;
  };

  double res = eval(x);
  State<D> best = x;
  double best_res = res;
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(M)), dx;
  State<D> cand = x;
  bool want_refactor = !ws.factored;
  double prev_res = std::numeric_limits<double>::infinity();

  for (int it = 0; it < par.max_newton; ++it) {
    if (best_res <= polish) break;
    if (best_res <= tol && res >= prev_res) break;  // stagnated below tolerance

    if (want_refactor) {
      refactor(x);
      want_refactor = false;
    }
    for (std::size_t i = 0; i < M; ++i) rhs[static_cast<Eigen::Index>(i)] = -ws.scr.R[i];
    dx = ws.lu.solve(rhs);

    double lam = 1.0;
    bool accepted = false;
    while (lam >= kMinDamping) {
      cand.t = x.t;
      cand.rho = x.rho;
      cand.u = x.u;
      cand.th = x.th;
      for (std::int64_t c = 0; c < N; ++c) cand.rho[c] += lam * dx[static_cast<Eigen::Index>(c)];
      for (int j = 0; j < D; ++j)
        for (std::int64_t c = 0; c < N; ++c)
          cand.u[static_cast<std::size_t>(j) * N + c] +=
              lam * dx[static_cast<Eigen::Index>((1 + j) * N + c)];
      for (std::int64_t c = 0; c < N; ++c)
        cand.th[c] += lam * dx[static_cast<Eigen::Index>((1 + D) * N + c)];

      bool positive = true;
      for (std::int64_t c = 0; c < N; ++c)
        if (!(cand.rho[c] > 0.0)) {
          positive = false;
          break;
        }
      if (positive) {
        double cres = eval(cand);
        if (cres < res || cres <= polish) {
          prev_res = res;
          res = cres;
          std::swap(x.rho, cand.rho);
          std::swap(x.u, cand.u);
          std::swap(x.th, cand.th);
          accepted = true;
          break;
        }
      }
      lam *= 0.5;
    }

    ++stats.iterations;
    if (!accepted) {
      if (ws.age > 0) {
        want_refactor = true;  // stale Jacobian: retry this position fresh
        eval(x);               // restore scratch residual for the next solve
        continue;
      }
      break;  // fresh Jacobian and still no progress
    }
    if (res < best_res) {
      best_res = res;
      best.rho = x.rho;
      best.u = x.u;
      best.th = x.th;
    }
    ++ws.age;
    if (ws.age > 0 && prev_res > 0.0 && res > 0.25 * prev_res && res > polish)
      want_refactor = true;  // slow contraction: refresh before the next step
  }

  stats.residual = best_res;
  stats.converged = best_res <= tol;
  if (!stats.converged) {
    bool rho_ok = true;
    for (std::int64_t c = 0; c < N; ++c)
      if (!(best.rho[c] > 0.0)) rho_ok = false;
    stats.failure = rho_ok ? StepFailure::NoConvergence : StepFailure::PositivityLost;
    return stats;
  }
  for (std::int64_t c = 0; c < N; ++c) {
    if (!(best.rho[c] > 0.0) || !(best.th[c] > 0.0)) {
      stats.converged = false;
      stats.failure = StepFailure::PositivityLost;
      return stats;
    }
  }
  state.rho = std::move(best.rho);
  state.u = std::move(best.u);
  state.th = std::move(best.th);
  state.t = old.t + par.dt;
  return stats;
}

}  // namespace nsfbox

#endif
