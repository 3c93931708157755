#ifndef NSFBOX_DIAGNOSTICS_HPP
#define NSFBOX_DIAGNOSTICS_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <initializer_list>
#include <limits>
#include <vector>

#include "eos.hpp"
#include "field.hpp"
#include "grid.hpp"
#include "mask.hpp"
#include "ops.hpp"
#include "scheme.hpp"
#include "util.hpp"

// Balance ledgers: every term of the discrete energy, entropy, ballistic and
// renormalized-continuity balances, evaluated independently of the solver
// from a pair of consecutive states. The balances are algebraic identities
// of the scheme, so each residual is zero up to the nonlinear solver's
// stopping tolerance; a residual above 10*tol*scale indicates a bug, not
// modeling error. All reductions go through pairwise_sum for determinism.

namespace nsfbox {

struct EnergyLedger {
  double E_new = 0, E_old = 0, dt_E = 0;
  double P_u = 0, P_theta = 0;
  double D_E_time = 0, D_E_visc_alpha = 0, D_E_upwind = 0, D_E = 0;
  double residual = 0, scale = 1;
};

struct EntropyLedger {
  double time_term = 0, conv_term = 0, penalty_term = 0, cond_term = 0, visc_term = 0;
  double D_s1 = 0, D_s2 = 0, D_s3 = 0, R_s = 0;
  double residual = 0, scale = 1;
};

struct BallisticLedger {
  double dt_ballistic = 0;           // D_t of (kinetic + internal - rho s phi)
  double pen_u = 0, pen_theta2 = 0;  // (1/eps) |u|^2 and (theta-thB)^2/theta
  double cond_quad = 0;              // kappa avg(phi)/(th th_out) |grad_E th|^2
  double visc_prod = 0;              // (phi/theta) S : grad u
  double D_s = 0, D_E = 0;
  double transport = 0;  // -int rho s (D_t phi + u . grad_h phi)
  double cond_cross = 0; // kappa avg(1/theta) grad_E theta . grad_E phi
  double R_B1 = 0, R_B2 = 0, R_s = 0;
  double residual = 0, scale = 1;
};

struct RenormLedger {
  double time_term = 0, conv_term = 0, div_term = 0;
  double time_rem = 0, jump_rem = 0, upwind_rem = 0;
  double residual = 0, scale = 1;
};

struct RelativeEnergy {
  double value = 0;  // Bregman form
  double l2sq = 0;   // squared L2 distance surrogate
};

namespace detail {

template <int D>
double half_speed2(const State<D>& st, std::int64_t N, std::int64_t c) {
  double k = 0.0;
  for (int j = 0; j < D; ++j) {
    const double uj = st.u[static_cast<std::size_t>(j) * N + c];
    k += uj * uj;
  }
  return 0.5 * k;
}

inline double sum_abs(std::initializer_list<double> terms) {
  double s = 0.0;
  for (double t : terms) s += std::fabs(t);
  return s;
}

}  // namespace detail

template <int D>
double total_energy(const State<D>& st, const GasLaw& gas, const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  std::vector<double> buf(N);
  for (std::int64_t c = 0; c < N; ++c)
    buf[c] = detail::half_speed2(st, N, c) * st.rho[c] + gas.cv * st.rho[c] * st.th[c];
  return g.cell_volume() * pairwise_sum(buf);
}

template <int D>
double total_mass(const State<D>& st, const Grid<D>& g) {
  return g.cell_volume() * pairwise_sum(st.rho);
}

// Energy balance: D_t E + (1/eps) int_solid (|u|^2 + (theta - theta_wall))
// = -D_E, with D_E split into its three nonnegative parts.
template <int D>
EnergyLedger energy_balance(const State<D>& nw, const State<D>& od, const SchemeParams& par,
                            const Grid<D>& g, const DomainMask<D>& mask,
                            const std::vector<double>& theta_wall) {
  const std::int64_t N = g.ncells;
  const double volK = g.cell_volume();
  const double volS = g.face_area();
  const double halpha = std::pow(g.h, par.alpha);
  EnergyLedger led;

  led.E_new = total_energy(nw, par.gas, g);
  led.E_old = total_energy(od, par.gas, g);
  led.dt_E = (led.E_new - led.E_old) / par.dt;

  std::vector<double> pu(N, 0.0), pth(N, 0.0), dtime(N, 0.0);
  for (std::int64_t c = 0; c < N; ++c) {
    if (mask.solid(c)) {
      pu[c] = 2.0 * detail::half_speed2(nw, N, c);
      pth[c] = nw.th[c] - theta_wall[c];
    }
    double du2 = 0.0;
    for (int j = 0; j < D; ++j) {
      const double d = nw.u[static_cast<std::size_t>(j) * N + c] -
                       od.u[static_cast<std::size_t>(j) * N + c];
      du2 += d * d;
    }
    dtime[c] = od.rho[c] * du2;
  }
  led.P_u = volK / par.eps * pairwise_sum(pu);
  led.P_theta = volK / par.eps * pairwise_sum(pth);
  led.D_E_time = volK / (2.0 * par.dt) * pairwise_sum(dtime);

  std::vector<double> fvisc(static_cast<std::size_t>(D) * N), fup(fvisc.size());
  for (int a = 0; a < D; ++a) {
    const double* ua = nw.u.data() + static_cast<std::size_t>(a) * N;
    for (std::int64_t c = 0; c < N; ++c) {
      const std::int64_t o = g.nbr[a][c];
      double ju2 = 0.0;
      for (int j = 0; j < D; ++j) {
        const double d = nw.u[static_cast<std::size_t>(j) * N + o] -
                         nw.u[static_cast<std::size_t>(j) * N + c];
        ju2 += d * d;
      }
      const double ub = 0.5 * (ua[c] + ua[o]);
      const double rup = upwind_value(nw.rho[c], nw.rho[o], ub);
      const std::size_t f = static_cast<std::size_t>(a) * N + c;
      fvisc[f] = 0.5 * (nw.rho[c] + nw.rho[o]) * ju2;
      fup[f] = 0.5 * rup * std::fabs(ub) * ju2;
    }
  }
  led.D_E_visc_alpha = halpha * volS * pairwise_sum(fvisc);
  led.D_E_upwind = volS * pairwise_sum(fup);
  led.D_E = led.D_E_time + led.D_E_visc_alpha + led.D_E_upwind;

  led.residual = led.dt_E + led.P_u + led.P_theta + led.D_E;
  led.scale = std::max(1.0, detail::sum_abs({led.dt_E, led.P_u, led.P_theta, led.D_E}));
  return led;
}

// Viscous production integral int (phi/theta) S:grad u with
// S:grad u = 2 mu |D_h u|^2 + lambda (div_h u)^2 evaluated cellwise.
template <int D>
double weighted_viscous_production(const State<D>& st, const std::vector<double>& phi,
                                   const SchemeParams& par, const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  const double inv2h = 1.0 / (2.0 * g.h);
  std::vector<double> buf(N);
  for (std::int64_t c = 0; c < N; ++c) {
    double Gm[D][D];
    double div = 0.0;
    for (int j = 0; j < D; ++j) {
      const double* uj = st.u.data() + static_cast<std::size_t>(j) * N;
      for (int a = 0; a < D; ++a) {
        Gm[j][a] = (uj[g.nbr[a][c]] - uj[g.nbr_m[a][c]]) * inv2h;
        if (j == a) div += Gm[j][a];
      }
    }
    double d2 = 0.0;
    for (int j = 0; j < D; ++j)
      for (int a = 0; a < D; ++a) {
        const double dja = 0.5 * (Gm[j][a] + Gm[a][j]);
        d2 += dja * dja;
      }
    buf[c] = (phi[c] / st.th[c]) * (2.0 * par.mu * d2 + par.lambda * div * div);
  }
  return g.cell_volume() * pairwise_sum(buf);
}

namespace detail {

// Entropy dissipation terms D_s1..3 and remainder R_s in the computable
// Taylor-remainder forms; shared by the entropy and ballistic ledgers.
template <int D>
void entropy_dissipation(const State<D>& nw, const State<D>& od, const std::vector<double>& phi,
                         const SchemeParams& par, const Grid<D>& g, double& D_s1, double& D_s2,
                         double& D_s3, double& R_s) {
  const std::int64_t N = g.ncells;
  const double volK = g.cell_volume();
  const double volS = g.face_area();
  const double halpha = std::pow(g.h, par.alpha);
  const double cv = par.gas.cv;

  std::vector<double> b1(N);
  for (std::int64_t c = 0; c < N; ++c)
    b1[c] = phi[c] * (bregman_rho_log_rho(od.rho[c], nw.rho[c]) -
                      cv * od.rho[c] * bregman_log(od.th[c], nw.th[c]));
  D_s1 = volK / par.dt * pairwise_sum(b1);

  std::vector<double> b2(static_cast<std::size_t>(D) * N), b3(b2.size()), br(b2.size());
  for (int a = 0; a < D; ++a) {
    const double* ua = nw.u.data() + static_cast<std::size_t>(a) * N;
    for (std::int64_t c = 0; c < N; ++c) {
      const std::int64_t o = g.nbr[a][c];
      const std::size_t f = static_cast<std::size_t>(a) * N + c;
      const double ub = 0.5 * (ua[c] + ua[o]);
      const double r_up = upwind_value(nw.rho[c], nw.rho[o], ub);
      const double r_dn = downwind_value(nw.rho[c], nw.rho[o], ub);
      const double t_up = upwind_value(nw.th[c], nw.th[o], ub);
      const double t_dn = downwind_value(nw.th[c], nw.th[o], ub);
      const double phi_dn = downwind_value(phi[c], phi[o], ub);
      b2[f] = std::fabs(ub) * phi_dn *
              (bregman_rho_log_rho(r_up, r_dn) - cv * r_up * bregman_log(t_up, t_dn));

      const double s_in = par.gas.entropy(nw.rho[c], nw.th[c]);
      const double s_out = par.gas.entropy(nw.rho[o], nw.th[o]);
      const double grho_in = cv + 1.0 - s_in, grho_out = cv + 1.0 - s_out;
      const double gp_in = -cv / nw.th[c], gp_out = -cv / nw.th[o];
      const double p_in = nw.rho[c] * nw.th[c], p_out = nw.rho[o] * nw.th[o];
      const double jr = nw.rho[o] - nw.rho[c], jp = p_out - p_in;
      b3[f] = 0.5 * (phi[c] + phi[o]) * ((grho_out - grho_in) * jr + (gp_out - gp_in) * jp);
      br[f] = (phi[o] - phi[c]) *
              (0.5 * (grho_in + grho_out) * jr + 0.5 * (gp_in + gp_out) * jp);
    }
  }
  D_s2 = volS * pairwise_sum(b2);
  D_s3 = halpha * volS * pairwise_sum(b3);
  R_s = halpha * volS * pairwise_sum(br);
}

}  // namespace detail

// Entropy balance with test function phi >= 0:
//   int D_t(rho s) phi - int_faces Up(rho s, u) [phi]
//   + (1/eps) int_solid (theta - theta_wall) phi/theta
//   - int (phi/theta) S:grad u + int kappa grad_E theta . grad_E(phi/theta)
//   = D_s1 + D_s2 + D_s3 + R_s.
template <int D>
EntropyLedger entropy_balance(const State<D>& nw, const State<D>& od,
                              const std::vector<double>& phi, const SchemeParams& par,
                              const Grid<D>& g, const DomainMask<D>& mask,
                              const std::vector<double>& theta_wall) {
  const std::int64_t N = g.ncells;
  const double volK = g.cell_volume();
  const double volS = g.face_area();
  EntropyLedger led;

  std::vector<double> bt(N), bp(N, 0.0);
  for (std::int64_t c = 0; c < N; ++c) {
    const double rs_new = nw.rho[c] * par.gas.entropy(nw.rho[c], nw.th[c]);
    const double rs_old = od.rho[c] * par.gas.entropy(od.rho[c], od.th[c]);
    bt[c] = (rs_new - rs_old) * phi[c];
    if (mask.solid(c)) bp[c] = (nw.th[c] - theta_wall[c]) * phi[c] / nw.th[c];
  }
  led.time_term = volK / par.dt * pairwise_sum(bt);
  led.penalty_term = volK / par.eps * pairwise_sum(bp);

  std::vector<double> bc(static_cast<std::size_t>(D) * N), bk(bc.size());
  for (int a = 0; a < D; ++a) {
    const double* ua = nw.u.data() + static_cast<std::size_t>(a) * N;
    for (std::int64_t c = 0; c < N; ++c) {
      const std::int64_t o = g.nbr[a][c];
      const std::size_t f = static_cast<std::size_t>(a) * N + c;
      const double ub = 0.5 * (ua[c] + ua[o]);
      const double rs_in = nw.rho[c] * par.gas.entropy(nw.rho[c], nw.th[c]);
      const double rs_out = nw.rho[o] * par.gas.entropy(nw.rho[o], nw.th[o]);
      bc[f] = upwind_value(rs_in, rs_out, ub) * ub * (phi[o] - phi[c]);
      bk[f] = (nw.th[o] - nw.th[c]) * (phi[o] / nw.th[o] - phi[c] / nw.th[c]);
    }
  }
  led.conv_term = -volS * pairwise_sum(bc);
  led.cond_term = par.kappa / g.h * volS * pairwise_sum(bk);
  led.visc_term = -weighted_viscous_production(nw, phi, par, g);

  detail::entropy_dissipation(nw, od, phi, par, g, led.D_s1, led.D_s2, led.D_s3, led.R_s);

  const double lhs =
      led.time_term + led.conv_term + led.penalty_term + led.visc_term + led.cond_term;
  const double rhs = led.D_s1 + led.D_s2 + led.D_s3 + led.R_s;
  led.residual = lhs - rhs;
  led.scale = std::max(1.0, detail::sum_abs({led.time_term, led.conv_term, led.penalty_term,
                                             led.visc_term, led.cond_term, led.D_s1, led.D_s2,
                                             led.D_s3, led.R_s}));
  return led;
}

// Ballistic energy balance for a positive weight phi (phi_old = weight at the
// previous time level; pass the same vector for time-independent weights):
//   D_t int(1/2 rho|u|^2 + cv rho theta - rho s phi)
//   + (1/eps) int_solid |u|^2 + (1/eps) int_solid (theta-theta_wall)^2/theta
//   + kappa int avg(phi)/(th th^out) |grad_E th|^2 + int (phi/th) S:grad u
//   + D_s(phi) + D_E
//   = -int rho s (D_t phi + u . grad_h phi)
//     + kappa int avg(1/th) grad_E th . grad_E phi + R_B1 + R_B2 - R_s(phi).
template <int D>
BallisticLedger ballistic_balance(const State<D>& nw, const State<D>& od,
                                  const std::vector<double>& phi,
                                  const std::vector<double>& phi_old, const SchemeParams& par,
                                  const Grid<D>& g, const DomainMask<D>& mask,
                                  const std::vector<double>& theta_wall) {
  const std::int64_t N = g.ncells;
  const double volK = g.cell_volume();
  const double volS = g.face_area();
  const double cv = par.gas.cv;
  const double inv2h = 1.0 / (2.0 * g.h);
  BallisticLedger led;

  std::vector<double> bnew(N), bold(N), bpen_u(N, 0.0), bpen_t(N, 0.0), brb1(N, 0.0), btrans(N);
  for (std::int64_t c = 0; c < N; ++c) {
    const double s_new = par.gas.entropy(nw.rho[c], nw.th[c]);
    const double s_old = par.gas.entropy(od.rho[c], od.th[c]);
    bnew[c] = detail::half_speed2(nw, N, c) * nw.rho[c] + cv * nw.rho[c] * nw.th[c] -
              nw.rho[c] * s_new * phi[c];
    bold[c] = detail::half_speed2(od, N, c) * od.rho[c] + cv * od.rho[c] * od.th[c] -
              od.rho[c] * s_old * phi_old[c];
    if (mask.solid(c)) {
      bpen_u[c] = 2.0 * detail::half_speed2(nw, N, c);
      const double dth = nw.th[c] - theta_wall[c];
      bpen_t[c] = dth * dth / nw.th[c];
      brb1[c] = dth * (phi[c] - theta_wall[c]) / nw.th[c];
    }
    // transport: rho s (D_t phi + u . grad_h phi) at the new level
    double adv = (phi[c] - phi_old[c]) / par.dt;
    for (int a = 0; a < D; ++a)
      adv += nw.u[static_cast<std::size_t>(a) * N + c] *
             (phi[g.nbr[a][c]] - phi[g.nbr_m[a][c]]) * inv2h;
    btrans[c] = nw.rho[c] * s_new * adv;
  }
  led.dt_ballistic = (volK * pairwise_sum(bnew) - volK * pairwise_sum(bold)) / par.dt;
  led.pen_u = volK / par.eps * pairwise_sum(bpen_u);
  led.pen_theta2 = volK / par.eps * pairwise_sum(bpen_t);
  led.transport = -volK * pairwise_sum(btrans);

  // R_B1 second part: dt * int D_t(rho s) D_t phi.
  std::vector<double> brb1b(N);
  for (std::int64_t c = 0; c < N; ++c) {
    const double rs_new = nw.rho[c] * par.gas.entropy(nw.rho[c], nw.th[c]);
    const double rs_old = od.rho[c] * par.gas.entropy(od.rho[c], od.th[c]);
    brb1b[c] = (rs_new - rs_old) / par.dt * (phi[c] - phi_old[c]) / par.dt;
  }
  led.R_B1 = volK / par.eps * pairwise_sum(brb1) + par.dt * volK * pairwise_sum(brb1b);

  std::vector<double> bq(static_cast<std::size_t>(D) * N), bx(bq.size()), brb2(bq.size());
  for (int a = 0; a < D; ++a) {
    const double* ua = nw.u.data() + static_cast<std::size_t>(a) * N;
    for (std::int64_t c = 0; c < N; ++c) {
      const std::int64_t o = g.nbr[a][c];
      const std::size_t f = static_cast<std::size_t>(a) * N + c;
      const double jth = nw.th[o] - nw.th[c];
      const double jphi = phi[o] - phi[c];
      bq[f] = 0.5 * (phi[c] + phi[o]) / (nw.th[c] * nw.th[o]) * jth * jth;
      bx[f] = 0.5 * (1.0 / nw.th[c] + 1.0 / nw.th[o]) * jth * jphi;
      const double ub = 0.5 * (ua[c] + ua[o]);
      const double rs_in = nw.rho[c] * par.gas.entropy(nw.rho[c], nw.th[c]);
      const double rs_out = nw.rho[o] * par.gas.entropy(nw.rho[o], nw.th[o]);
      const double jrs = rs_out - rs_in;
      brb2[f] = 0.5 * std::fabs(ub) * jrs * jphi + 0.25 * (ua[o] - ua[c]) * jrs * jphi;
    }
  }
  led.cond_quad = par.kappa / g.h * volS * pairwise_sum(bq);
  led.cond_cross = par.kappa / g.h * volS * pairwise_sum(bx);
  led.R_B2 = volS * pairwise_sum(brb2);

  // Viscous production via the full stress contraction sum_jl S_jl G_jl;
  // the entropy ledger evaluates the same integral through the invariant
  // form 2 mu |D|^2 + lambda div^2, giving an independent cross-check.
  {
    std::vector<double> bv(N);
    for (std::int64_t c = 0; c < N; ++c) {
      double Gm[D][D];
      double div = 0.0;
      for (int j = 0; j < D; ++j) {
        const double* uj = nw.u.data() + static_cast<std::size_t>(j) * N;
        for (int a = 0; a < D; ++a) {
          Gm[j][a] = (uj[g.nbr[a][c]] - uj[g.nbr_m[a][c]]) * inv2h;
          if (j == a) div += Gm[j][a];
        }
      }
      double prod = 0.0;
      for (int j = 0; j < D; ++j)
        for (int a = 0; a < D; ++a) {
          const double S_ja = par.mu * (Gm[j][a] + Gm[a][j]) + (j == a ? par.lambda * div : 0.0);
          prod += S_ja * Gm[j][a];
        }
      bv[c] = (phi[c] / nw.th[c]) * prod;
    }
    led.visc_prod = volK * pairwise_sum(bv);
  }

  double D_s1, D_s2, D_s3;
  detail::entropy_dissipation(nw, od, phi, par, g, D_s1, D_s2, D_s3, led.R_s);
  led.D_s = D_s1 + D_s2 + D_s3;

  EnergyLedger en = energy_balance(nw, od, par, g, mask, theta_wall);
  led.D_E = en.D_E;

  const double lhs = led.dt_ballistic + led.pen_u + led.pen_theta2 + led.cond_quad +
                     led.visc_prod + led.D_s + led.D_E;
  const double rhs = led.transport + led.cond_cross + led.R_B1 + led.R_B2 - led.R_s;
  led.residual = lhs - rhs;
  led.scale = std::max(1.0, detail::sum_abs({led.dt_ballistic, led.pen_u, led.pen_theta2,
                                             led.cond_quad, led.visc_prod, led.D_s, led.D_E,
                                             led.transport, led.cond_cross, led.R_B1, led.R_B2,
                                             led.R_s}));
  return led;
}

// Renormalized continuity for a C^1 function B:
//   int D_t B(rho) phi - int_faces Up[B(rho), u] [phi]
//   + int phi (rho B'(rho) - B(rho)) div_h u
//   = -(1/dt) int phi E_B(rho_old | rho) - h^alpha int_faces [rho][B'(rho) phi]
//     - int_faces |avg u . n| phi_down E_B(rho_up | rho_down).
template <int D>
RenormLedger renormalized_continuity_check(const State<D>& nw, const State<D>& od,
                                           const std::function<double(double)>& B,
                                           const std::function<double(double)>& Bp,
                                           const std::vector<double>& phi,
                                           const SchemeParams& par, const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  const double volK = g.cell_volume();
  const double volS = g.face_area();
  const double halpha = std::pow(g.h, par.alpha);
  const double inv2h = 1.0 / (2.0 * g.h);
  RenormLedger led;

  const auto E_B = [&](double a, double b) { return B(a) - Bp(b) * (a - b) - B(b); };

  std::vector<double> bt(N), bd(N), brem(N);
  for (std::int64_t c = 0; c < N; ++c) {
    bt[c] = (B(nw.rho[c]) - B(od.rho[c])) * phi[c];
    double div = 0.0;
    for (int a = 0; a < D; ++a) {
      const double* ua = nw.u.data() + static_cast<std::size_t>(a) * N;
      div += (ua[g.nbr[a][c]] - ua[g.nbr_m[a][c]]) * inv2h;
    }
    bd[c] = phi[c] * (nw.rho[c] * Bp(nw.rho[c]) - B(nw.rho[c])) * div;
    brem[c] = phi[c] * E_B(od.rho[c], nw.rho[c]);
  }
  led.time_term = volK / par.dt * pairwise_sum(bt);
  led.div_term = volK * pairwise_sum(bd);
  led.time_rem = -volK / par.dt * pairwise_sum(brem);

  std::vector<double> bc(static_cast<std::size_t>(D) * N), bj(bc.size()), bu(bc.size());
  for (int a = 0; a < D; ++a) {
    const double* ua = nw.u.data() + static_cast<std::size_t>(a) * N;
    for (std::int64_t c = 0; c < N; ++c) {
      const std::int64_t o = g.nbr[a][c];
      const std::size_t f = static_cast<std::size_t>(a) * N + c;
      const double ub = 0.5 * (ua[c] + ua[o]);
      const double B_in = B(nw.rho[c]), B_out = B(nw.rho[o]);
      bc[f] = upwind_value(B_in, B_out, ub) * ub * (phi[o] - phi[c]);
      bj[f] = (nw.rho[o] - nw.rho[c]) * (Bp(nw.rho[o]) * phi[o] - Bp(nw.rho[c]) * phi[c]);
      const double r_up = upwind_value(nw.rho[c], nw.rho[o], ub);
      const double r_dn = downwind_value(nw.rho[c], nw.rho[o], ub);
      bu[f] = std::fabs(ub) * downwind_value(phi[c], phi[o], ub) * E_B(r_up, r_dn);
    }
  }
  led.conv_term = -volS * pairwise_sum(bc);
  led.jump_rem = -halpha * volS * pairwise_sum(bj);
  led.upwind_rem = -volS * pairwise_sum(bu);

  led.residual = (led.time_term + led.conv_term + led.div_term) -
                 (led.time_rem + led.jump_rem + led.upwind_rem);
  led.scale = std::max(1.0, detail::sum_abs({led.time_term, led.conv_term, led.div_term,
                                             led.time_rem, led.jump_rem, led.upwind_rem}));
  return led;
}

// Relative energy with respect to a reference triple, Bregman form:
//   int 1/2 rho |u - u_ref|^2
//     + H(rho,theta) - dH/drho(ref)(rho - rho_ref) - H(ref)
// with H(rho,theta) = rho (cv theta - theta_ref s(rho,theta)). Nonnegative
// for positive arguments; also returns the squared-L2 surrogate.
template <int D>
RelativeEnergy relative_energy(const State<D>& st, const std::vector<double>& ref_rho,
                               const std::vector<double>& ref_u,
                               const std::vector<double>& ref_th, const GasLaw& gas,
                               const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  const double cv = gas.cv;
  std::vector<double> bre(N), bl2(N);
  for (std::int64_t c = 0; c < N; ++c) {
    double du2 = 0.0;
    for (int j = 0; j < D; ++j) {
      const double d = st.u[static_cast<std::size_t>(j) * N + c] -
                       ref_u[static_cast<std::size_t>(j) * N + c];
      du2 += d * d;
    }
    const double rho = st.rho[c], th = st.th[c];
    const double rr = ref_rho[c], rt = ref_th[c];
    const double s = gas.entropy(rho, th);
    const double s_ref = gas.entropy(rr, rt);
    const double H = rho * (cv * th - rt * s);
    const double H_ref = rr * (cv * rt - rt * s_ref);
    const double dH_ref = cv * rt + rt * (1.0 - s_ref);
    bre[c] = 0.5 * rho * du2 + H - dH_ref * (rho - rr) - H_ref;
    const double drho = rho - rr, dth = th - rt;
    bl2[c] = du2 + drho * drho + dth * dth;
  }
  RelativeEnergy re;
  re.value = g.cell_volume() * pairwise_sum(bre);
  re.l2sq = g.cell_volume() * pairwise_sum(bl2);
  return re;
}

// Running extrema and accumulated dissipation/penalty integrals of a run.
struct BoundsMonitor {
  double min_rho = std::numeric_limits<double>::infinity();
  double max_rho = -std::numeric_limits<double>::infinity();
  double min_theta = std::numeric_limits<double>::infinity();
  double max_theta = -std::numeric_limits<double>::infinity();
  double max_pressure = 0;
  double u_l2 = 0;  // current-state L2 norm of u
  double acc_grad_theta2 = 0;
  double acc_sym_grad_u2 = 0;
  double acc_face_dissipation = 0;
  double acc_penalty = 0;   // (1/eps) int (|u|^2 + (theta - theta_wall)^2), time-integrated
  double acc_u_solid2 = 0;  // int_solid |u|^2, time-integrated
};

template <int D>
void update_bounds_monitor(BoundsMonitor& m, const State<D>& st, const SchemeParams& par,
                           const Grid<D>& g, const DomainMask<D>& mask,
                           const std::vector<double>& theta_wall) {
  const std::int64_t N = g.ncells;
  const double volK = g.cell_volume();
  const double volS = g.face_area();
  const double halpha = std::pow(g.h, par.alpha);
  const double inv2h = 1.0 / (2.0 * g.h);

  std::vector<double> bu(N), bsym(N), bpen(N, 0.0), bus(N, 0.0);
  for (std::int64_t c = 0; c < N; ++c) {
    m.min_rho = std::min(m.min_rho, st.rho[c]);
    m.max_rho = std::max(m.max_rho, st.rho[c]);
    m.min_theta = std::min(m.min_theta, st.th[c]);
    m.max_theta = std::max(m.max_theta, st.th[c]);
    m.max_pressure = std::max(m.max_pressure, std::fabs(par.gas.pressure(st.rho[c], st.th[c])));
    const double u2 = 2.0 * detail::half_speed2(st, N, c);
    bu[c] = u2;
    double d2 = 0.0, Gm_[D][D];
    for (int j = 0; j < D; ++j) {
      const double* uj = st.u.data() + static_cast<std::size_t>(j) * N;
      for (int a = 0; a < D; ++a) Gm_[j][a] = (uj[g.nbr[a][c]] - uj[g.nbr_m[a][c]]) * inv2h;
    }
    for (int j = 0; j < D; ++j)
      for (int a = 0; a < D; ++a) {
        const double dja = 0.5 * (Gm_[j][a] + Gm_[a][j]);
        d2 += dja * dja;
      }
    bsym[c] = d2;
    if (mask.solid(c)) {
      const double dth = st.th[c] - theta_wall[c];
      bpen[c] = u2 + dth * dth;
      bus[c] = u2;
    }
  }
  m.u_l2 = std::sqrt(volK * pairwise_sum(bu));
  m.acc_sym_grad_u2 += par.dt * volK * pairwise_sum(bsym);
  m.acc_penalty += par.dt * volK / par.eps * pairwise_sum(bpen);
  m.acc_u_solid2 += par.dt * volK * pairwise_sum(bus);

  std::vector<double> bg(static_cast<std::size_t>(D) * N), bf(bg.size());
  for (int a = 0; a < D; ++a) {
    const double* ua = st.u.data() + static_cast<std::size_t>(a) * N;
    for (std::int64_t c = 0; c < N; ++c) {
      const std::int64_t o = g.nbr[a][c];
      const std::size_t f = static_cast<std::size_t>(a) * N + c;
      const double jth = (st.th[o] - st.th[c]) / g.h;
      bg[f] = jth * jth;
      const double ub = 0.5 * (ua[c] + ua[o]);
      const double jr = st.rho[o] - st.rho[c];
      const double jp = par.gas.pressure(st.rho[o], st.th[o]) -
                        par.gas.pressure(st.rho[c], st.th[c]);
      double ju2 = 0.0;
      for (int j = 0; j < D; ++j) {
        const double d = st.u[static_cast<std::size_t>(j) * N + o] -
                         st.u[static_cast<std::size_t>(j) * N + c];
        ju2 += d * d;
      }
      bf[f] = (halpha + std::fabs(ub)) * (jr * jr + jp * jp + ju2);
    }
  }
  m.acc_grad_theta2 += par.dt * volK * pairwise_sum(bg);  // dual cells carry |D_sigma| = h^D
  m.acc_face_dissipation += par.dt * volS * pairwise_sum(bf);
}

}  // namespace nsfbox

#endif
