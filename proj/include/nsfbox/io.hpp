#ifndef NSFBOX_IO_HPP
#define NSFBOX_IO_HPP

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grid.hpp"
#include "mask.hpp"
#include "scheme.hpp"
#include "util.hpp"

namespace nsfbox {

// One diagnostics CSV row per accepted step. Column order is a frozen
// external contract; additions are append-only. Entropy columns are for the
// constant test function, ballistic columns for the projected wall weight.
struct BalanceRow {
  std::int64_t step = 0;
  double t = 0;
  double E_total = 0;
  double P_u = 0, P_theta = 0, P_theta_sq = 0;
  double D_E = 0, D_E_time = 0, D_E_visc_alpha = 0, D_E_upwind = 0;
  double D_s1 = 0, D_s2 = 0, D_s3 = 0, R_s = 0;
  double R_B1 = 0, R_B2 = 0;
  double res_energy = 0, res_entropy = 0, res_ballistic = 0;
  double min_rho = 0, max_rho = 0, min_theta = 0, max_theta = 0;
  double mass = 0;
  int newton_iters = 0;
};

inline const char* diagnostics_csv_header() {
  return "step, t, E_total, P_u, P_theta, P_theta_sq, D_E, D_E_time, D_E_visc_alpha, "
         "D_E_upwind, D_s1, D_s2, D_s3, R_s, R_B1, R_B2, res_energy, res_entropy, "
         "res_ballistic, min_rho, max_rho, min_theta, max_theta, mass, newton_iters";
}

inline std::string diagnostics_csv_line(const BalanceRow& r) {
  std::string s;
  s.reserve(512);
  const auto add = [&](const std::string& v) {
    if (!s.empty()) s += ", ";
    s += v;
  };
  add(std::to_string(r.step));
  add(format_shortest(r.t));
  add(format_shortest(r.E_total));
  add(format_shortest(r.P_u));
  add(format_shortest(r.P_theta));
  add(format_shortest(r.P_theta_sq));
  add(format_shortest(r.D_E));
  add(format_shortest(r.D_E_time));
  add(format_shortest(r.D_E_visc_alpha));
  add(format_shortest(r.D_E_upwind));
  add(format_shortest(r.D_s1));
  add(format_shortest(r.D_s2));
  add(format_shortest(r.D_s3));
  add(format_shortest(r.R_s));
  add(format_shortest(r.R_B1));
  add(format_shortest(r.R_B2));
  add(format_shortest(r.res_energy));
  add(format_shortest(r.res_entropy));
  add(format_shortest(r.res_ballistic));
  add(format_shortest(r.min_rho));
  add(format_shortest(r.max_rho));
  add(format_shortest(r.min_theta));
  add(format_shortest(r.max_theta));
  add(format_shortest(r.mass));
  add(std::to_string(r.newton_iters));
  return s;
}

inline void write_diagnostics_csv(const std::vector<BalanceRow>& rows,
                                  const std::string& path) {
  std::ofstream out(path, std::ios::binary);  // binary: fixed \n line endings
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << diagnostics_csv_header() << "\n";
  for (const BalanceRow& r : rows) out << diagnostics_csv_line(r) << "\n";
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

// Legacy-VTK structured-points snapshot: cell data rho, theta, mask and the
// velocity vector (z component zero in 2d). Cell order is x fastest, which
// matches the grid's linear cell index.
template <int D>
void write_snapshot(const State<D>& st, const DomainMask<D>& mask, const Grid<D>& g,
                    const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const std::int64_t N = g.ncells;
  const std::string hs = format_shortest(g.h);

  out << "# vtk DataFile Version 3.0\n";
  out << "penalized gas state t=" << format_shortest(st.t) << "\n";
  out << "ASCII\n";
  out << "DATASET STRUCTURED_POINTS\n";
  if constexpr (D == 2) {
    out << "DIMENSIONS " << g.n + 1 << " " << g.n + 1 << " 1\n";
    out << "ORIGIN 0 0 0\n";
    out << "SPACING " << hs << " " << hs << " " << hs << "\n";
  } else {
    out << "DIMENSIONS " << g.n + 1 << " " << g.n + 1 << " " << g.n + 1 << "\n";
    out << "ORIGIN 0 0 0\n";
    out << "SPACING " << hs << " " << hs << " " << hs << "\n";
  }
  out << "CELL_DATA " << N << "\n";

  out << "SCALARS rho double 1\nLOOKUP_TABLE default\n";
  for (std::int64_t c = 0; c < N; ++c) out << format_shortest(st.rho[c]) << "\n";
  out << "SCALARS theta double 1\nLOOKUP_TABLE default\n";
  for (std::int64_t c = 0; c < N; ++c) out << format_shortest(st.th[c]) << "\n";
  out << "SCALARS mask int 1\nLOOKUP_TABLE default\n";
  for (std::int64_t c = 0; c < N; ++c) out << (mask.solid(c) ? 1 : 0) << "\n";
  out << "VECTORS u double\n";
  for (std::int64_t c = 0; c < N; ++c) {
    out << format_shortest(st.u[c]);
    out << " " << format_shortest(st.u[N + c]);
    if constexpr (D == 3) {
      out << " " << format_shortest(st.u[2 * N + c]);
    } else {
      out << " 0";
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

// Compact binary state snapshot for reference trajectories.
template <int D>
void write_state_bin(const State<D>& st, const Grid<D>& g, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  const char magic[4] = {'N', 'S', 'F', 'B'};
  const std::int32_t dim = D, n = static_cast<std::int32_t>(g.n);
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  out.write(reinterpret_cast<const char*>(&st.t), 8);
  const auto dump = [&](const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  dump(st.rho);
  dump(st.u);
  dump(st.th);
  if (!out) throw std::runtime_error("write failed on '" + path + "'");
}

template <int D>
State<D> read_state_bin(const Grid<D>& g, const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  char magic[4];
  std::int32_t dim = 0, n = 0;
  State<D> st;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&dim), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  in.read(reinterpret_cast<char*>(&st.t), 8);
  if (!in || magic[0] != 'N' || magic[1] != 'S' || magic[2] != 'F' || magic[3] != 'B' ||
      dim != D || n != g.n)
    throw std::runtime_error("'" + path + "' is not a state snapshot for this grid");
  const std::size_t N = static_cast<std::size_t>(g.ncells);
  st.rho.resize(N);
  st.u.resize(static_cast<std::size_t>(D) * N);
  st.th.resize(N);
  const auto load = [&](std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
  };
  load(st.rho);
  load(st.u);
  load(st.th);
  if (!in) throw std::runtime_error("truncated snapshot '" + path + "'");
  return st;
}

}  // namespace nsfbox

#endif
