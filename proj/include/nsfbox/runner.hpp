#ifndef NSFBOX_RUNNER_HPP
#define NSFBOX_RUNNER_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "config.hpp"
#include "diagnostics.hpp"
#include "eos.hpp"
#include "field.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "mask.hpp"
#include "ops.hpp"
#include "scheme.hpp"
#include "util.hpp"

// Builds a ready-to-run problem from a validated RunConfig (grid, shape,
// domain split, parameters, wall temperature, projected initial state) and
// drives time stepping with per-step balance ledgers.

namespace nsfbox {

template <int D>
struct Problem {
  Grid<D> grid;
  FluidShape<D> shape;
  DomainMask<D> mask;
  SchemeParams par;
  std::vector<double> theta_wall;  // projected wall temperature, all cells
  State<D> init;
};

namespace detail {

// Low-mode trigonometric perturbation with |value| <= 1.
template <int D>
struct FourierModes {
  std::array<std::array<int, D>, 3> k;
  std::array<double, 3> amp, phase;

  static FourierModes draw(Rng& rng) {
    FourierModes m;
    for (int i = 0; i < 3; ++i) {
      for (int a = 0; a < D; ++a) m.k[i][a] = rng.uniform_int(1, 2);
      m.amp[i] = rng.uniform(-1.0, 1.0) / 3.0;
      m.phase[i] = rng.uniform(0.0, 6.283185307179586);
    }
    return m;
  }

  double operator()(const std::array<double, D>& x, double L) const {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) {
      double arg = phase[i];
      for (int a = 0; a < D; ++a) arg += 6.283185307179586 * k[i][a] * x[a] / L;
      v += amp[i] * std::cos(arg);
    }
    return v;
  }
};

}  // namespace detail

// Smooth cutoff supported on the fluid region: (1 - q^2)^2 in terms of the
// shape's normalized boundary coordinate; product of sin^2 on the full torus.
template <int D>
double fluid_bump(const FluidShape<D>& shape, const std::array<double, D>& x) {
  if (shape.kind == ShapeKind::Empty) return 0.0;
  if (shape.kind == ShapeKind::Full) {
    double v = 1.0;
    for (int a = 0; a < D; ++a) {
      const double s = std::sin(3.141592653589793 * x[a] / shape.L);
      v *= s * s;
    }
    return v;
  }
  const double q = shape.boundary_q(x);
  if (q >= 1.0) return 0.0;
  const double w = 1.0 - q * q;
  return w * w;
}

template <int D>
FluidShape<D> shape_from_config(const RunConfig& cfg) {
  std::array<double, D> center{};
  for (int a = 0; a < D; ++a)
    center[a] = a < static_cast<int>(cfg.shape.center.size()) ? cfg.shape.center[a]
                                                              : 0.5 * cfg.L;
  if (cfg.shape.kind == "full") return make_full<D>(cfg.L);
  if (cfg.shape.kind == "empty") return make_empty<D>(cfg.L);
  if (cfg.shape.kind == "ball") return make_ball<D>(cfg.L, center, cfg.shape.radius);
  if (cfg.shape.kind == "ellipse") {
    std::array<double, D> ax{};
    for (int a = 0; a < D; ++a) ax[a] = cfg.shape.semi_axes[a];
    return make_ellipse<D>(cfg.L, center, ax);
  }
  std::array<double, D> hw{};
  for (int a = 0; a < D; ++a) hw[a] = cfg.shape.halfwidth[a];
  return make_box<D>(cfg.L, center, hw);
}

// Wall temperature theta_B as a pointwise function (positive by config
// validation; cosine modulation exercises x-dependent boundary data).
template <int D>
double wall_temperature(const RunConfig& cfg, const std::array<double, D>& x) {
  return cfg.theta_wall +
         cfg.theta_wall_amp * std::cos(6.283185307179586 * x[0] / cfg.L);
}

template <int D>
Problem<D> build_problem(const RunConfig& cfg, std::uint64_t seed, int threads) {
  Problem<D> prob;
  prob.grid = build_grid<D>(cfg.n, cfg.L);
  prob.shape = shape_from_config<D>(cfg);
  prob.shape.validate(prob.grid.h);
  prob.mask = split_domain(prob.grid, prob.shape);

  prob.par.dt = cfg.dt;
  prob.par.eps = cfg.eps();
  prob.par.alpha = cfg.alpha;
  prob.par.mu = cfg.mu;
  prob.par.lambda = cfg.lambda;
  prob.par.kappa = cfg.kappa;
  prob.par.gas = GasLaw::make(cfg.gamma);
  prob.par.tol_newton = cfg.tol_newton;
  prob.par.max_newton = cfg.max_newton;
  prob.par.threads = threads;
  prob.par.check();

  const FluidShape<D>& shape = prob.shape;
  const double L = cfg.L;
  prob.theta_wall = project_cells<D>(
      [&](const std::array<double, D>& x) { return wall_temperature<D>(cfg, x); }, prob.grid,
      threads);

  // Swirl center for the velocity presets.
  std::array<double, D> cc{};
  for (int a = 0; a < D; ++a)
    cc[a] = a < static_cast<int>(cfg.shape.center.size()) &&
                    (cfg.shape.kind != "full" && cfg.shape.kind != "empty")
                ? cfg.shape.center[a]
                : 0.5 * L;

  Rng rng(seed);
  const auto mode_rho = detail::FourierModes<D>::draw(rng);
  std::array<detail::FourierModes<D>, D> mode_u;
  for (int j = 0; j < D; ++j) mode_u[j] = detail::FourierModes<D>::draw(rng);
  const auto mode_th = detail::FourierModes<D>::draw(rng);
  const double pa = cfg.perturb_amp;

  const auto rho_f = [&, mode_rho](const std::array<double, D>& x) {
    const double psi = fluid_bump<D>(shape, x);
    double v = cfg.rho_base + cfg.rho_amp * psi;
    if (pa != 0.0) v += pa * psi * mode_rho(x, L);
    return v;
  };
  const auto th_f = [&, mode_th](const std::array<double, D>& x) {
    const double psi = fluid_bump<D>(shape, x);
    double v = cfg.theta_base + cfg.theta_amp * psi;
    if (pa != 0.0) v += pa * psi * mode_th(x, L);
    return v;
  };
  const auto u_f = [&, mode_u](const std::array<double, D>& x) {
    const double psi = fluid_bump<D>(shape, x);
    std::array<double, D> v{};
    if (cfg.preset == "gaussian-bump") {
      std::array<double, D> dx{};
      for (int a = 0; a < D; ++a) dx[a] = std::remainder(x[a] - cc[a], L);
      v[0] = -cfg.u_amp * psi * dx[1];
      v[1] = cfg.u_amp * psi * dx[0];
    } else if (cfg.preset == "shear") {
      v[0] = cfg.u_amp * psi * std::sin(6.283185307179586 * x[1] / L);
    }
    if (pa != 0.0)
      for (int j = 0; j < D; ++j) v[j] += pa * psi * mode_u[j](x, L);
    return v;
  };

  ExtendedTriple<D> triple;
  triple.shape = &prob.shape;
  triple.rho_fluid = rho_f;
  triple.u_fluid = u_f;
  triple.theta_fluid = th_f;
  triple.rho_solid = [&](const std::array<double, D>&) { return cfg.rho_solid; };
  triple.theta_wall = [&](const std::array<double, D>& x) {
    return wall_temperature<D>(cfg, x);
  };

  prob.init.t = 0.0;
  prob.init.rho = project_cells<D>(
      [&](const std::array<double, D>& x) { return triple.rho(x); }, prob.grid, threads);
  prob.init.u = project_velocity<D>(
      [&](const std::array<double, D>& x) { return triple.u(x); }, prob.grid, threads);
  prob.init.th = project_cells<D>(
      [&](const std::array<double, D>& x) { return triple.theta(x); }, prob.grid, threads);
  return prob;
}

template <int D>
struct RunResult {
  State<D> final_state;
  std::vector<BalanceRow> rows;
  BoundsMonitor monitor;
  std::int64_t accepted_steps = 0;
  double max_identity_rel = 0.0;  // worst residual/scale over the run
  bool solver_ok = true;
  bool identities_ok = true;
  std::string message;
};

// Time-stepping driver. Appends a diagnostics row every csv_every steps,
// gates every balance residual at 10 * tol_newton * scale when
// check_identities is set, and stops on the first solver failure.
template <int D>
RunResult<D> drive_run(
    const RunConfig& cfg, Problem<D>& prob,
    const std::function<void(std::int64_t, const State<D>&)>& on_step = nullptr,
    const std::string& vtk_dir = std::string()) {
  const Grid<D>& g = prob.grid;
  const std::int64_t N = g.ncells;
  RunResult<D> res;
  State<D> state = prob.init;
  State<D> old = state;
  NewtonWorkspace<D> ws;
  const std::vector<double> ones(static_cast<std::size_t>(N), 1.0);
  const std::int64_t nsteps = cfg.steps();
  const double gate = 10.0 * prob.par.tol_newton;

  if (on_step) on_step(0, state);

  for (std::int64_t step = 1; step <= nsteps; ++step) {
    old = state;
    const StepStats stats = advance_step<D>(state, prob.par, g, prob.mask, prob.theta_wall, ws);
    if (stats.failure != StepFailure::None) {
      res.solver_ok = false;
      res.message = "step " + std::to_string(step) + ": " +
                    (stats.failure == StepFailure::NoConvergence
                         ? "nonlinear solver did not converge (residual " +
                               format_shortest(stats.residual) + ")"
                         : "solver lost positivity of rho or theta");
      res.final_state = old;
      return res;
    }
    ++res.accepted_steps;
    update_bounds_monitor<D>(res.monitor, state, prob.par, g, prob.mask, prob.theta_wall);

    const bool csv_due = cfg.csv_every > 0 && (step % cfg.csv_every == 0);
    if (csv_due || cfg.check_identities) {
      const EnergyLedger en = energy_balance<D>(state, old, prob.par, g, prob.mask,
                                                prob.theta_wall);
      const EntropyLedger ent = entropy_balance<D>(state, old, ones, prob.par, g, prob.mask,
                                                   prob.theta_wall);
      const BallisticLedger bal = ballistic_balance<D>(state, old, prob.theta_wall,
                                                       prob.theta_wall, prob.par, g, prob.mask,
                                                       prob.theta_wall);
      BalanceRow row;
      row.step = step;
      row.t = state.t;
      row.E_total = en.E_new;
      row.P_u = en.P_u;
      row.P_theta = en.P_theta;
      row.P_theta_sq = bal.pen_theta2;
      row.D_E = en.D_E;
      row.D_E_time = en.D_E_time;
      row.D_E_visc_alpha = en.D_E_visc_alpha;
      row.D_E_upwind = en.D_E_upwind;
      row.D_s1 = ent.D_s1;
      row.D_s2 = ent.D_s2;
      row.D_s3 = ent.D_s3;
      row.R_s = ent.R_s;
      row.R_B1 = bal.R_B1;
      row.R_B2 = bal.R_B2;
      row.res_energy = en.residual;
      row.res_entropy = ent.residual;
      row.res_ballistic = bal.residual;
      double mn_r = state.rho[0], mx_r = state.rho[0];
      double mn_t = state.th[0], mx_t = state.th[0];
      for (std::int64_t c = 1; c < N; ++c) {
        mn_r = std::min(mn_r, state.rho[c]);
        mx_r = std::max(mx_r, state.rho[c]);
        mn_t = std::min(mn_t, state.th[c]);
        mx_t = std::max(mx_t, state.th[c]);
      }
      row.min_rho = mn_r;
      row.max_rho = mx_r;
      row.min_theta = mn_t;
      row.max_theta = mx_t;
      row.mass = total_mass<D>(state, g);
      row.newton_iters = stats.iterations;
      if (csv_due) res.rows.push_back(row);

      if (cfg.check_identities) {
        const double r_en = std::fabs(en.residual) / en.scale;
        const double r_ent = std::fabs(ent.residual) / ent.scale;
        const double r_bal = std::fabs(bal.residual) / bal.scale;
        const double worst = std::max(r_en, std::max(r_ent, r_bal));
        res.max_identity_rel = std::max(res.max_identity_rel, worst);
        if (worst > gate) {
          res.identities_ok = false;
          res.message = "step " + std::to_string(step) +
                        ": balance residual exceeds gate (energy " + format_shortest(r_en) +
                        ", entropy " + format_shortest(r_ent) + ", ballistic " +
                        format_shortest(r_bal) + ", gate " + format_shortest(gate) + ")";
          res.final_state = state;
          return res;
        }
      }
    }

    if (!vtk_dir.empty() && cfg.vtk_every > 0 && step % cfg.vtk_every == 0) {
      std::string num = std::to_string(step);
      while (num.size() < 6) num.insert(num.begin(), '0');
      write_snapshot<D>(state, prob.mask, g, vtk_dir + "/snapshot_" + num + ".vtk");
    }
    if (on_step) on_step(step, state);
  }
  res.final_state = state;
  return res;
}

struct VerifyReport {
  double worst_operator_identity = 0.0;
  double worst_balance_rel = 0.0;
  bool ok = false;
  std::vector<std::string> lines;
};

// One-step verification: operator identities on random fields, then a single
// implicit step from the configured initial data with every balance checked.
template <int D>
VerifyReport verify_problem(const RunConfig& cfg, Problem<D>& prob, std::uint64_t seed) {
  VerifyReport rep;
  const Grid<D>& g = prob.grid;
  const std::int64_t N = g.ncells;
  const double gate = 10.0 * prob.par.tol_newton;

  rep.worst_operator_identity = check_summation_by_parts(g, seed);
  rep.lines.push_back("operator identities: worst relative defect " +
                      format_shortest(rep.worst_operator_identity));
  bool ok = rep.worst_operator_identity <= 1e-12;

  State<D> state = prob.init;
  State<D> old = state;
  NewtonWorkspace<D> ws;
  const StepStats stats = advance_step<D>(state, prob.par, g, prob.mask, prob.theta_wall, ws);
  if (stats.failure != StepFailure::None) {
    rep.lines.push_back("one-step solve: FAILED to converge");
    rep.ok = false;
    return rep;
  }
  rep.lines.push_back("one-step solve: " + std::to_string(stats.iterations) +
                      " iterations, residual " + format_shortest(stats.residual));

  const std::vector<double> ones(static_cast<std::size_t>(N), 1.0);
  const auto check = [&](const char* name, double residual, double scale) {
    const double rel = std::fabs(residual) / scale;
    rep.worst_balance_rel = std::max(rep.worst_balance_rel, rel);
    const bool pass = rel <= gate;
    ok = ok && pass;
    rep.lines.push_back(std::string(name) + ": residual " + format_shortest(residual) +
                        " (relative " + format_shortest(rel) + (pass ? ", ok)" : ", FAIL)"));
  };

  const EnergyLedger en = energy_balance<D>(state, old, prob.par, g, prob.mask, prob.theta_wall);
  check("energy balance", en.residual, en.scale);
  const EntropyLedger e1 = entropy_balance<D>(state, old, ones, prob.par, g, prob.mask,
                                              prob.theta_wall);
  check("entropy balance (phi = 1)", e1.residual, e1.scale);
  const EntropyLedger e2 = entropy_balance<D>(state, old, prob.theta_wall, prob.par, g,
                                              prob.mask, prob.theta_wall);
  check("entropy balance (phi = wall)", e2.residual, e2.scale);
  const BallisticLedger bal = ballistic_balance<D>(state, old, prob.theta_wall, prob.theta_wall,
                                                   prob.par, g, prob.mask, prob.theta_wall);
  check("ballistic balance (phi = wall)", bal.residual, bal.scale);
  const auto sq = [](double r) { return r * r; };
  const auto dsq = [](double r) { return 2.0 * r; };
  const RenormLedger rn1 = renormalized_continuity_check<D>(state, old, sq, dsq, ones,
                                                            prob.par, g);
  check("renormalized continuity (B = rho^2)", rn1.residual, rn1.scale);
  const auto blog = [](double r) { return r * std::log(r); };
  const auto dblog = [](double r) { return std::log(r) + 1.0; };
  const RenormLedger rn2 = renormalized_continuity_check<D>(state, old, blog, dblog, ones,
                                                            prob.par, g);
  check("renormalized continuity (B = rho log rho)", rn2.residual, rn2.scale);

  // The viscous production integral enters the entropy and ballistic ledgers
  // through independent code paths; they must agree tightly.
  const double vp_e = -e2.visc_term;
  const double vp_b = bal.visc_prod;
  const double vp_rel = std::fabs(vp_e - vp_b) / std::max(1.0, std::fabs(vp_e));
  ok = ok && vp_rel <= 1e-13;
  rep.lines.push_back("viscous production cross-check: relative difference " +
                      format_shortest(vp_rel) + (vp_rel <= 1e-13 ? " (ok)" : " (FAIL)"));

  rep.ok = ok;
  return rep;
}

}  // namespace nsfbox

#endif
