#ifndef NSFBOX_CONFIG_HPP
#define NSFBOX_CONFIG_HPP

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "util.hpp"

// Run configuration: flat "[section]" / "key = value" text, typed values,
// full validation. parse_config reports every error it finds, not just the
// first; parse -> serialize -> parse is a fixed point for valid configs.

namespace nsfbox {

struct ShapeConfig {
  std::string kind = "ball";  // ball | ellipse | box | full | empty
  std::vector<double> center{0.5, 0.5};
  double radius = 0.3;
  std::vector<double> semi_axes;  // ellipse
  std::vector<double> halfwidth;  // box
};

struct StudyConfig {
  std::vector<int> resolutions{8, 16, 32};
  int n_ref = 128;
  std::string dt_rule = "h2";   // h | h2 | const
  double dt_coeff = 0.64;       // default: integer step counts for t_end = 0.02
  std::string eps_rule = "h2";  // h2 | const
  double eps_coeff = 1.0;
};

struct RunConfig {
  // [grid]
  int dim = 2;
  int n = 16;
  double L = 1.0;
  // [physics]
  double mu = 0.1;
  double lambda = 0.0;
  double kappa = 0.1;
  double gamma = 1.4;
  // [scheme]
  double dt = 1e-3;
  double t_end = 0.02;
  double alpha = 0.0;
  std::string eps_rule = "h2";  // h2 | const
  double eps_coeff = 1.0;
  double tol_newton = 1e-11;
  int max_newton = 40;
  // [geometry]
  ShapeConfig shape;
  double rho_solid = 1.0;
  double theta_wall = 1.0;
  double theta_wall_amp = 0.0;  // spatial modulation amplitude (cos mode)
  // [init]
  std::string preset = "gaussian-bump";  // constant | gaussian-bump | shear
  double rho_base = 1.0;
  double rho_amp = 0.3;
  double u_amp = 0.4;
  double theta_base = 1.0;
  double theta_amp = 0.2;
  double perturb_amp = 0.0;  // seeded low-mode perturbation
  std::uint64_t seed = 12345;
  // [diagnostics]
  int csv_every = 1;
  int vtk_every = 0;
  int check_identities = 1;
  // [output]
  std::string output_dir = "out";
  // [study]
  StudyConfig study;

  double h() const { return L / n; }
  double eps() const { return eps_rule == "const" ? eps_coeff : eps_coeff * h() * h(); }
  std::int64_t steps() const { return static_cast<std::int64_t>(std::llround(t_end / dt)); }
};

struct ConfigResult {
  RunConfig config;
  std::vector<std::string> errors;  // empty iff valid
  bool ok() const { return errors.empty(); }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline bool to_double(std::string_view s, double& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

inline bool to_int(std::string_view s, int& out) {
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && p == e;
}

inline std::vector<std::string_view> split_commas(std::string_view s) {
  std::vector<std::string_view> parts;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t comma = s.find(',', pos);
    if (comma == std::string_view::npos) {
      parts.push_back(trim(s.substr(pos)));
      break;
    }
    parts.push_back(trim(s.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return parts;
}

}  // namespace detail

// Semantic validation; appends one message per violated constraint.
inline void validate_config(const RunConfig& c, std::vector<std::string>& errors) {
  const auto err = [&](const std::string& m) { errors.push_back(m); };

  if (c.dim != 2 && c.dim != 3) err("grid.dim must be 2 or 3");
  if (c.n < 4) err("grid.n must be at least 4");
  if (!(c.L > 0.0)) err("grid.L must be positive");

  if (!(c.gamma > 1.0)) err("physics.gamma: adiabatic exponent must exceed 1");
  if (!(c.mu > 0.0)) err("physics.mu must be positive");
  if (!(c.kappa > 0.0)) err("physics.kappa must be positive");
  if (!(c.mu + c.lambda >= 0.0)) err("physics.lambda: mu + lambda must be nonnegative");

  if (!(c.dt > 0.0)) err("scheme.dt must be positive");
  if (!(c.t_end > 0.0)) err("scheme.t_end must be positive");
  if (c.dt > 0.0 && c.t_end > 0.0) {
    const double q = c.t_end / c.dt;
    const double r = std::llround(q);
    if (std::fabs(q - r) > 1e-12 * std::max(1.0, r))
      err("scheme.t_end must be an integer multiple of scheme.dt (to 1e-12)");
  }
  if (!(c.alpha > -1.0)) err("scheme.alpha: artificial viscosity exponent must exceed -1");
  if (c.eps_rule != "h2" && c.eps_rule != "const")
    err("scheme.eps_rule must be 'h2' or 'const'");
  if (!(c.eps_coeff > 0.0)) err("scheme.eps_coeff must be positive");
  if (!(c.tol_newton > 0.0)) err("scheme.tol_newton must be positive");
  if (c.max_newton < 1) err("scheme.max_newton must be at least 1");

  const std::size_t dim = static_cast<std::size_t>(c.dim == 3 ? 3 : 2);
  if (c.shape.kind != "ball" && c.shape.kind != "ellipse" && c.shape.kind != "box" &&
      c.shape.kind != "full" && c.shape.kind != "empty")
    err("geometry.shape must be one of: ball, ellipse, box, full, empty");
  if (c.shape.kind == "ball" && !(c.shape.radius > 0.0))
    err("geometry.radius must be positive");
  if (c.shape.kind != "full" && c.shape.kind != "empty" && c.shape.center.size() != dim)
    err("geometry.center must have grid.dim components");
  if (c.shape.kind == "ellipse") {
    if (c.shape.semi_axes.size() != dim)
      err("geometry.semi_axes must have grid.dim components");
    for (double a : c.shape.semi_axes)
      if (!(a > 0.0)) {
        err("geometry.semi_axes entries must be positive");
        break;
      }
  }
  if (c.shape.kind == "box") {
    if (c.shape.halfwidth.size() != dim)
      err("geometry.halfwidth must have grid.dim components");
    for (double a : c.shape.halfwidth)
      if (!(a > 0.0)) {
        err("geometry.halfwidth entries must be positive");
        break;
      }
  }
  if (!(c.rho_solid > 0.0)) err("geometry.rho_solid must be positive");
  if (!(c.theta_wall - std::fabs(c.theta_wall_amp) > 0.0))
    err("geometry.theta_wall minus |theta_wall_amp| must be positive");

  if (c.preset != "constant" && c.preset != "gaussian-bump" && c.preset != "shear")
    err("init.preset must be one of: constant, gaussian-bump, shear");
  if (!(c.rho_base - std::fabs(c.rho_amp) - std::fabs(c.perturb_amp) > 0.0))
    err("init.rho_base minus |rho_amp| minus |perturb_amp| must be positive");
  if (!(c.theta_base - std::fabs(c.theta_amp) - std::fabs(c.perturb_amp) > 0.0))
    err("init.theta_base minus |theta_amp| minus |perturb_amp| must be positive");

  if (c.csv_every < 0) err("diagnostics.csv_every must be nonnegative");
  if (c.vtk_every < 0) err("diagnostics.vtk_every must be nonnegative");

  if (c.study.resolutions.empty()) err("study.resolutions must be nonempty");
  for (std::size_t i = 0; i < c.study.resolutions.size(); ++i) {
    if (c.study.resolutions[i] < 4) {
      err("study.resolutions entries must be at least 4");
      break;
    }
  }
  for (std::size_t i = 0; i + 1 < c.study.resolutions.size(); ++i) {
    const int a = c.study.resolutions[i], b = c.study.resolutions[i + 1];
    if (a >= b || (a >= 4 && b % a != 0)) {
      err("study.resolutions must be increasing with each entry dividing the next");
      break;
    }
  }
  if (!c.study.resolutions.empty() && c.study.resolutions.back() >= 4 &&
      c.study.n_ref < 4 * c.study.resolutions.back())
    err("study.n_ref must be at least 4x the finest study resolution");
  if (!c.study.resolutions.empty() && c.study.resolutions.back() >= 1 &&
      c.study.n_ref % c.study.resolutions.back() != 0)
    err("study.n_ref must be a multiple of every study resolution");
  if (c.study.dt_rule != "h" && c.study.dt_rule != "h2" && c.study.dt_rule != "const")
    err("study.dt_rule must be 'h', 'h2' or 'const'");
  if (!(c.study.dt_coeff > 0.0)) err("study.dt_coeff must be positive");
  if (c.study.eps_rule != "h2" && c.study.eps_rule != "const")
    err("study.eps_rule must be 'h2' or 'const'");
  if (!(c.study.eps_coeff > 0.0)) err("study.eps_coeff must be positive");
  if (c.study.dt_coeff > 0.0 && c.t_end > 0.0 && c.L > 0.0 &&
      (c.study.dt_rule == "h" || c.study.dt_rule == "h2" || c.study.dt_rule == "const")) {
    std::vector<int> family = c.study.resolutions;
    family.push_back(c.study.n_ref);
    for (int n : family) {
      if (n < 4) continue;
      const double h = c.L / n;
      const double dt = c.study.dt_rule == "h"    ? c.study.dt_coeff * h
                        : c.study.dt_rule == "h2" ? c.study.dt_coeff * h * h
                                                  : c.study.dt_coeff;
      const double q = c.t_end / dt;
      const double r = std::llround(q);
      if (std::fabs(q - r) > 1e-12 * std::max(1.0, r)) {
        err("study: t_end must be an integer multiple of the step at every resolution "
            "(violated at n = " + std::to_string(n) + ")");
        break;
      }
    }
  }
}

// Parses config text. Collects syntax errors (with line numbers), unknown
// key errors, and all semantic validation errors.
inline ConfigResult parse_config_text(const std::string& text) {
  ConfigResult res;
  RunConfig& c = res.config;
  std::string section;
  int lineno = 0;
  std::istringstream in(text);
  std::string raw;

  const auto err = [&](const std::string& m) {
    res.errors.push_back("line " + std::to_string(lineno) + ": " + m);
  };

  while (std::getline(in, raw)) {
    ++lineno;
    std::string_view line = detail::trim(raw);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        err("malformed section header");
        continue;
      }
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section != "grid" && section != "physics" && section != "scheme" &&
          section != "geometry" && section != "init" && section != "diagnostics" &&
          section != "output" && section != "study")
        err("unknown section [" + section + "]");
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      err("expected 'key = value'");
      continue;
    }
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string_view val = detail::trim(line.substr(eq + 1));
    if (key.empty()) {
      err("empty key");
      continue;
    }

    const auto want_int = [&](int& dst) {
      if (!detail::to_int(val, dst)) err("value of '" + key + "' must be an integer");
    };
    const auto want_double = [&](double& dst) {
      if (!detail::to_double(val, dst)) err("value of '" + key + "' must be a number");
    };
    const auto want_string = [&](std::string& dst) { dst = std::string(val); };
    const auto want_doubles = [&](std::vector<double>& dst) {
      dst.clear();
      for (std::string_view part : detail::split_commas(val)) {
        double v;
        if (!detail::to_double(part, v)) {
          err("value of '" + key + "' must be a comma-separated list of numbers");
          return;
        }
        dst.push_back(v);
      }
    };
    const auto want_ints = [&](std::vector<int>& dst) {
      dst.clear();
      for (std::string_view part : detail::split_commas(val)) {
        int v;
        if (!detail::to_int(part, v)) {
          err("value of '" + key + "' must be a comma-separated list of integers");
          return;
        }
        dst.push_back(v);
      }
    };

    bool known = true;
    if (section == "grid") {
      if (key == "dim") want_int(c.dim);
      else if (key == "n") want_int(c.n);
      else if (key == "L") want_double(c.L);
      else known = false;
    } else if (section == "physics") {
      if (key == "mu") want_double(c.mu);
      else if (key == "lambda") want_double(c.lambda);
      else if (key == "kappa") want_double(c.kappa);
      else if (key == "gamma") want_double(c.gamma);
      else known = false;
    } else if (section == "scheme") {
      if (key == "dt") want_double(c.dt);
      else if (key == "t_end") want_double(c.t_end);
      else if (key == "alpha") want_double(c.alpha);
      else if (key == "eps_rule") want_string(c.eps_rule);
      else if (key == "eps_coeff") want_double(c.eps_coeff);
      else if (key == "tol_newton") want_double(c.tol_newton);
      else if (key == "max_newton") want_int(c.max_newton);
      else known = false;
    } else if (section == "geometry") {
      if (key == "shape") want_string(c.shape.kind);
      else if (key == "center") want_doubles(c.shape.center);
      else if (key == "radius") want_double(c.shape.radius);
      else if (key == "semi_axes") want_doubles(c.shape.semi_axes);
      else if (key == "halfwidth") want_doubles(c.shape.halfwidth);
      else if (key == "rho_solid") want_double(c.rho_solid);
      else if (key == "theta_wall") want_double(c.theta_wall);
      else if (key == "theta_wall_amp") want_double(c.theta_wall_amp);
      else known = false;
    } else if (section == "init") {
      if (key == "preset") want_string(c.preset);
      else if (key == "rho_base") want_double(c.rho_base);
      else if (key == "rho_amp") want_double(c.rho_amp);
      else if (key == "u_amp") want_double(c.u_amp);
      else if (key == "theta_base") want_double(c.theta_base);
      else if (key == "theta_amp") want_double(c.theta_amp);
      else if (key == "perturb_amp") want_double(c.perturb_amp);
      else if (key == "seed") {
        unsigned long long v = 0;
        const char* b = val.data();
        const char* e2 = val.data() + val.size();
        auto [p, ec] = std::from_chars(b, e2, v);
        if (ec != std::errc() || p != e2)
          err("value of 'seed' must be a nonnegative integer");
        else c.seed = v;
      }
      else known = false;
    } else if (section == "diagnostics") {
      if (key == "csv_every") want_int(c.csv_every);
      else if (key == "vtk_every") want_int(c.vtk_every);
      else if (key == "check_identities") want_int(c.check_identities);
      else known = false;
    } else if (section == "output") {
      if (key == "dir") want_string(c.output_dir);
      else known = false;
    } else if (section == "study") {
      if (key == "resolutions") want_ints(c.study.resolutions);
      else if (key == "n_ref") want_int(c.study.n_ref);
      else if (key == "dt_rule") want_string(c.study.dt_rule);
      else if (key == "dt_coeff") want_double(c.study.dt_coeff);
      else if (key == "eps_rule") want_string(c.study.eps_rule);
      else if (key == "eps_coeff") want_double(c.study.eps_coeff);
      else known = false;
    } else {
      err("key '" + key + "' outside any known section");
      continue;
    }
    if (!known) err("unknown key '" + key + "' in section [" + section + "]");
  }

  validate_config(c, res.errors);
  return res;
}

inline ConfigResult parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    ConfigResult res;
    res.errors.push_back("cannot open config file '" + path + "'");
    return res;
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

// Canonical serialization: every key, fixed order, shortest round-trip
// decimals. parse(serialize(c)) reproduces c exactly.
inline std::string serialize_config(const RunConfig& c) {
  const auto fmt_double = [](double v) { return format_shortest(v); };
  std::ostringstream o;
  const auto list_d = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += fmt_double(v[i]);
    }
    return s;
  };
  const auto list_i = [&](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(v[i]);
    }
    return s;
  };
  o << "[grid]\n";
  o << "dim = " << c.dim << "\n";
  o << "n = " << c.n << "\n";
  o << "L = " << fmt_double(c.L) << "\n";
  o << "\n[physics]\n";
  o << "mu = " << fmt_double(c.mu) << "\n";
  o << "lambda = " << fmt_double(c.lambda) << "\n";
  o << "kappa = " << fmt_double(c.kappa) << "\n";
  o << "gamma = " << fmt_double(c.gamma) << "\n";
  o << "\n[scheme]\n";
  o << "dt = " << fmt_double(c.dt) << "\n";
  o << "t_end = " << fmt_double(c.t_end) << "\n";
  o << "alpha = " << fmt_double(c.alpha) << "\n";
  o << "eps_rule = " << c.eps_rule << "\n";
  o << "eps_coeff = " << fmt_double(c.eps_coeff) << "\n";
  o << "tol_newton = " << fmt_double(c.tol_newton) << "\n";
  o << "max_newton = " << c.max_newton << "\n";
  o << "\n[geometry]\n";
  o << "shape = " << c.shape.kind << "\n";
  if (!c.shape.center.empty()) o << "center = " << list_d(c.shape.center) << "\n";
  o << "radius = " << fmt_double(c.shape.radius) << "\n";
  if (!c.shape.semi_axes.empty()) o << "semi_axes = " << list_d(c.shape.semi_axes) << "\n";
  if (!c.shape.halfwidth.empty()) o << "halfwidth = " << list_d(c.shape.halfwidth) << "\n";
  o << "rho_solid = " << fmt_double(c.rho_solid) << "\n";
  o << "theta_wall = " << fmt_double(c.theta_wall) << "\n";
  o << "theta_wall_amp = " << fmt_double(c.theta_wall_amp) << "\n";
  o << "\n[init]\n";
  o << "preset = " << c.preset << "\n";
  o << "rho_base = " << fmt_double(c.rho_base) << "\n";
  o << "rho_amp = " << fmt_double(c.rho_amp) << "\n";
  o << "u_amp = " << fmt_double(c.u_amp) << "\n";
  o << "theta_base = " << fmt_double(c.theta_base) << "\n";
  o << "theta_amp = " << fmt_double(c.theta_amp) << "\n";
  o << "perturb_amp = " << fmt_double(c.perturb_amp) << "\n";
  o << "seed = " << c.seed << "\n";
  o << "\n[diagnostics]\n";
  o << "csv_every = " << c.csv_every << "\n";
  o << "vtk_every = " << c.vtk_every << "\n";
  o << "check_identities = " << c.check_identities << "\n";
  o << "\n[output]\n";
  o << "dir = " << c.output_dir << "\n";
  o << "\n[study]\n";
  o << "resolutions = " << list_i(c.study.resolutions) << "\n";
  o << "n_ref = " << c.study.n_ref << "\n";
  o << "dt_rule = " << c.study.dt_rule << "\n";
  o << "dt_coeff = " << fmt_double(c.study.dt_coeff) << "\n";
  o << "eps_rule = " << c.study.eps_rule << "\n";
  o << "eps_coeff = " << fmt_double(c.study.eps_coeff) << "\n";
  return o.str();
}

}  // namespace nsfbox

#endif
