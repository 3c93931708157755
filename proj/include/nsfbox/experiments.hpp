#ifndef NSFBOX_EXPERIMENTS_HPP
#define NSFBOX_EXPERIMENTS_HPP

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "config.hpp"
#include "diagnostics.hpp"
#include "grid.hpp"
#include "ops.hpp"
#include "runner.hpp"
#include "scheme.hpp"
#include "util.hpp"

// Self-convergence studies: a fine-grid reference trajectory is restricted
// to each coarse grid by exact block averaging (grids are nested), the solid
// region is overwritten with the prescribed solid state, and errors are
// measured in the relative energy and L2 metrics. Observed orders are
// reported as an EOC table.

namespace nsfbox {

// Exact block mean of a scalar cell field from a nested finer grid.
template <int D>
std::vector<double> block_restrict_scalar(const std::vector<double>& fine, const Grid<D>& gf,
                                          const Grid<D>& gc) {
  if (gf.n % gc.n != 0) throw std::invalid_argument("restriction requires nested grids");
  const int r = gf.n / gc.n;
  const std::int64_t Nc = gc.ncells;
  std::int64_t nblock = 1;
  for (int a = 0; a < D; ++a) nblock *= r;
  std::vector<double> out(Nc);
  std::vector<double> buf(static_cast<std::size_t>(nblock));
  for (std::int64_t c = 0; c < Nc; ++c) {
    const auto ic = gc.coords(c);
    for (std::int64_t b = 0; b < nblock; ++b) {
      std::array<int, D> off{};
      std::int64_t t = b;
      for (int a = 0; a < D; ++a) {
        off[a] = static_cast<int>(t % r);
        t /= r;
      }
      std::array<int, D> idx{};
      for (int a = 0; a < D; ++a) idx[a] = ic[a] * r + off[a];
      buf[static_cast<std::size_t>(b)] = fine[gf.cell(idx)];
    }
    out[c] = pairwise_sum(buf) / static_cast<double>(nblock);
  }
  return out;
}

// Restriction of a full state; velocity restricted per component.
template <int D>
State<D> restrict_state(const State<D>& fine, const Grid<D>& gf, const Grid<D>& gc) {
  State<D> out;
  out.t = fine.t;
  out.rho = block_restrict_scalar<D>(fine.rho, gf, gc);
  out.th = block_restrict_scalar<D>(fine.th, gf, gc);
  const std::size_t Nf = static_cast<std::size_t>(gf.ncells);
  const std::size_t Nc = static_cast<std::size_t>(gc.ncells);
  out.u.resize(static_cast<std::size_t>(D) * Nc);
  std::vector<double> comp(Nf);
  for (int j = 0; j < D; ++j) {
    std::copy(fine.u.begin() + static_cast<std::ptrdiff_t>(j) * static_cast<std::ptrdiff_t>(Nf),
              fine.u.begin() + static_cast<std::ptrdiff_t>(j + 1) * static_cast<std::ptrdiff_t>(Nf),
              comp.begin());
    auto rc = block_restrict_scalar<D>(comp, gf, gc);
    std::copy(rc.begin(), rc.end(), out.u.begin() + static_cast<std::ptrdiff_t>(j) *
                                                        static_cast<std::ptrdiff_t>(Nc));
  }
  return out;
}

// Overwrite the solid cells of a restricted reference with the prescribed
// extension (rho_solid, 0, theta_wall), matching how reference solutions are
// extended off the fluid region.
template <int D>
void overwrite_solid(State<D>& st, const DomainMask<D>& mask, double rho_solid,
                     const std::vector<double>& theta_wall, const Grid<D>& g) {
  const std::int64_t N = g.ncells;
  for (std::int64_t c = 0; c < N; ++c) {
    if (!mask.solid(c)) continue;
    st.rho[c] = rho_solid;
    for (int j = 0; j < D; ++j) st.u[static_cast<std::size_t>(j) * N + c] = 0.0;
    st.th[c] = theta_wall[c];
  }
}

template <int D>
struct ReferenceTrajectory {
  Grid<D> grid;
  double dt_snap = 0.0;  // snapshot spacing (coarsest common step)
  std::vector<State<D>> states;  // states[k] at t = k * dt_snap

  const State<D>& at_time(double t) const {
    const std::int64_t k = static_cast<std::int64_t>(std::llround(t / dt_snap));
    return states.at(static_cast<std::size_t>(k));
  }
};

inline double study_dt(const StudyConfig& sc, double h) {
  if (sc.dt_rule == "h") return sc.dt_coeff * h;
  if (sc.dt_rule == "h2") return sc.dt_coeff * h * h;
  return sc.dt_coeff;
}

// Config for one resolution of the sweep: literal dt and eps per the
// coupling rules, diagnostics thinned to the identity gate only.
inline RunConfig resolution_config(const RunConfig& base, int n) {
  RunConfig c = base;
  c.n = n;
  c.dt = study_dt(base.study, c.h());
  c.eps_rule = base.study.eps_rule;
  c.eps_coeff = base.study.eps_coeff;
  c.csv_every = 0;
  c.vtk_every = 0;
  return c;
}

// Runs the fine-grid reference and keeps snapshots at every multiple of the
// finest coarse step (all coarse output times land on these).
template <int D>
ReferenceTrajectory<D> generate_reference(const RunConfig& cfg, std::uint64_t seed,
                                          int threads) {
  ReferenceTrajectory<D> ref;
  RunConfig rc = resolution_config(cfg, cfg.study.n_ref);
  const double h_finest = cfg.L / cfg.study.resolutions.back();
  ref.dt_snap = study_dt(cfg.study, h_finest);
  const double ratio = ref.dt_snap / rc.dt;
  const std::int64_t r = static_cast<std::int64_t>(std::llround(ratio));
  if (r < 1 || std::fabs(ratio - r) > 1e-9)
    throw std::invalid_argument("study: reference step does not divide the snapshot spacing");

  Problem<D> prob = build_problem<D>(rc, seed, threads);
  ref.grid = prob.grid;
  RunResult<D> res = drive_run<D>(rc, prob, [&](std::int64_t step, const State<D>& st) {
    if (step % r == 0) ref.states.push_back(st);
  });
  if (!res.solver_ok) throw std::runtime_error("reference run failed: " + res.message);
  if (!res.identities_ok)
    throw std::runtime_error("reference run identity failure: " + res.message);
  return ref;
}

struct StudyRow {
  int n = 0;
  double h = 0, dt = 0, eps = 0;
  bool failed = false;
  std::string fail_reason;
  // error metrics vs the restricted reference
  double err_re = 0;       // relative energy at t_end
  double err_l2 = 0;       // L2 distance of (rho, u, theta) at t_end
  double err_grad_u = 0;   // L2(0,T) distance of D_h u
  double err_grad_th = 0;  // L2(0,T) distance of grad_E theta
};

struct EOCTable {
  std::vector<StudyRow> rows;
  // orders[m][i] = observed order of metric m between rows i and i+1
  std::vector<std::vector<double>> orders;
};

// EOC between consecutive rows: log(e_i/e_{i+1}) / log(h_i/h_{i+1});
// NaN marks undefined entries (nonpositive error or failed run).
inline std::vector<double> compute_eoc(const std::vector<double>& errors,
                                       const std::vector<double>& hs) {
  std::vector<double> orders;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const double e0 = errors[i], e1 = errors[i + 1];
    if (!(e0 > 0.0) || !(e1 > 0.0) || !(hs[i] > hs[i + 1])) {
      orders.push_back(std::numeric_limits<double>::quiet_NaN());
    } else {
      orders.push_back(std::log(e0 / e1) / std::log(hs[i] / hs[i + 1]));
    }
  }
  return orders;
}

template <int D>
EOCTable convergence_study(const RunConfig& cfg, std::uint64_t seed, int threads) {
  const ReferenceTrajectory<D> ref = generate_reference<D>(cfg, seed, threads);
  EOCTable table;

  for (int n : cfg.study.resolutions) {
    RunConfig rc = resolution_config(cfg, n);
    StudyRow row;
    row.n = n;
    row.h = rc.h();
    row.dt = rc.dt;
    row.eps = rc.eps();

    Problem<D> prob = build_problem<D>(rc, seed, threads);
    const Grid<D>& gc = prob.grid;
    double acc_gu = 0.0, acc_gth = 0.0;

    const auto on_step = [&](std::int64_t step, const State<D>& st) {
      if (step == 0) return;
      State<D> rs = restrict_state<D>(ref.at_time(st.t), ref.grid, gc);
      overwrite_solid<D>(rs, prob.mask, rc.rho_solid, prob.theta_wall, gc);
      // D_h u distance, all tensor components
      auto Da = sym_gradient(st.u, gc);
      auto Db = sym_gradient(rs.u, gc);
      std::vector<double> buf(static_cast<std::size_t>(gc.ncells), 0.0);
      for (std::size_t i = 0; i < Da.size(); ++i) {
        const double d = Da[i] - Db[i];
        buf[i % static_cast<std::size_t>(gc.ncells)] += d * d;
      }
      acc_gu += rc.dt * gc.cell_volume() * pairwise_sum(buf);
      auto Ga = grad_faces(st.th, gc);
      auto Gb = grad_faces(rs.th, gc);
      std::vector<double> fbuf(Ga.size());
      for (std::size_t i = 0; i < Ga.size(); ++i) {
        const double d = Ga[i] - Gb[i];
        fbuf[i] = d * d;
      }
      acc_gth += rc.dt * dual_integral<D>(fbuf, gc);
    };

    RunResult<D> res = drive_run<D>(rc, prob, on_step);
    if (!res.solver_ok || !res.identities_ok) {
      row.failed = true;
      row.fail_reason = res.message;
      const double nan = std::numeric_limits<double>::quiet_NaN();
      row.err_re = row.err_l2 = row.err_grad_u = row.err_grad_th = nan;
      table.rows.push_back(row);
      continue;
    }

    State<D> rs = restrict_state<D>(ref.at_time(res.final_state.t), ref.grid, gc);
    overwrite_solid<D>(rs, prob.mask, rc.rho_solid, prob.theta_wall, gc);
    std::vector<double> ref_rho = rs.rho, ref_u = rs.u, ref_th = rs.th;
    const RelativeEnergy re =
        relative_energy<D>(res.final_state, ref_rho, ref_u, ref_th, prob.par.gas, gc);
    row.err_re = re.value;
    row.err_l2 = std::sqrt(re.l2sq);
    row.err_grad_u = std::sqrt(acc_gu);
    row.err_grad_th = std::sqrt(acc_gth);
    table.rows.push_back(row);
  }

  std::vector<double> hs;
  for (const StudyRow& r : table.rows) hs.push_back(r.h);
  const auto metric = [&](double StudyRow::*field) {
    std::vector<double> v;
    for (const StudyRow& r : table.rows)
      v.push_back(r.failed ? std::numeric_limits<double>::quiet_NaN() : r.*field);
    return compute_eoc(v, hs);
  };
  table.orders.push_back(metric(&StudyRow::err_re));
  table.orders.push_back(metric(&StudyRow::err_l2));
  table.orders.push_back(metric(&StudyRow::err_grad_u));
  table.orders.push_back(metric(&StudyRow::err_grad_th));
  return table;
}

inline std::string eoc_table_csv(const EOCTable& t) {
  std::ostringstream o;
  o << "n, h, dt, eps, failed, err_re, eoc_re, err_l2, eoc_l2, err_grad_u, eoc_grad_u, "
       "err_grad_th, eoc_grad_th\n";
  const auto ord = [&](std::size_t m, std::size_t i) -> std::string {
    if (i == 0 || i - 1 >= t.orders[m].size()) return "--";
    const double v = t.orders[m][i - 1];
    return std::isnan(v) ? "--" : format_shortest(v);
  };
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const StudyRow& r = t.rows[i];
    o << r.n << ", " << format_shortest(r.h) << ", " << format_shortest(r.dt) << ", "
      << format_shortest(r.eps) << ", " << (r.failed ? 1 : 0) << ", ";
    if (r.failed) {
      o << "failed, --, failed, --, failed, --, failed, --\n";
      continue;
    }
    o << format_shortest(r.err_re) << ", " << ord(0, i) << ", " << format_shortest(r.err_l2)
      << ", " << ord(1, i) << ", " << format_shortest(r.err_grad_u) << ", " << ord(2, i)
      << ", " << format_shortest(r.err_grad_th) << ", " << ord(3, i) << "\n";
  }
  return o.str();
}

inline std::string eoc_table_text(const EOCTable& t) {
  std::ostringstream o;
  o << "   n          h         dt        eps      err_re  eoc    err_l2  eoc  "
       "err_grad_u  eoc  err_grad_th  eoc\n";
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%9.3e", v);
    return std::string(buf);
  };
  const auto ordc = [&](std::size_t m, std::size_t i) -> std::string {
    if (i == 0 || i - 1 >= t.orders[m].size() || std::isnan(t.orders[m][i - 1])) return "  -- ";
    char buf[16];
    std::snprintf(buf, sizeof buf, "%5.2f", t.orders[m][i - 1]);
    return std::string(buf);
  };
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const StudyRow& r = t.rows[i];
    char head[64];
    std::snprintf(head, sizeof head, "%4d  %9.3e  %9.3e  %9.3e", r.n, r.h, r.dt, r.eps);
    o << head;
    if (r.failed) {
      o << "     run failed: " << r.fail_reason << "\n";
      continue;
    }
    o << "  " << num(r.err_re) << " " << ordc(0, i) << " " << num(r.err_l2) << " " << ordc(1, i)
      << "  " << num(r.err_grad_u) << " " << ordc(2, i) << "  " << num(r.err_grad_th) << " "
      << ordc(3, i) << "\n";
  }
  return o.str();
}

}  // namespace nsfbox

#endif
