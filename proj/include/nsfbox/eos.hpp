#ifndef NSFBOX_EOS_HPP
#define NSFBOX_EOS_HPP

#include <cmath>
#include <stdexcept>

namespace nsfbox {

// Ideal gas in (rho, theta) variables: p = rho theta, e = c_v theta,
// s = c_v log theta - log rho, with c_v = 1/(gamma - 1).
struct GasLaw {
  double gamma = 1.4;
  double cv = 2.5;

  static GasLaw make(double gamma) {
    if (!(gamma > 1.0)) throw std::invalid_argument("gas law: gamma must exceed 1");
    return GasLaw{gamma, 1.0 / (gamma - 1.0)};
  }

  // Extended law used inside the nonlinear solver: pressure is clamped to 0
  // for nonpositive temperature so transient iterates cannot feed an
  // unphysical negative pressure back into the residual. Converged states
  // are positivity-checked separately, so the clamp never fires on output.
  double pressure(double rho, double theta) const { return theta > 0.0 ? rho * theta : 0.0; }
  double internal_energy(double theta) const { return cv * theta; }
  double entropy(double rho, double theta) const {
    return cv * std::log(theta) - std::log(rho);
  }
};

// Bregman remainder E_f(a|b) = f(a) - f'(b)(a-b) - f(b); nonnegative for
// convex f. The two instances below are the ones the balance layer needs.
inline double bregman_rho_log_rho(double a, double b) {
  return a * std::log(a) - (std::log(b) + 1.0) * (a - b) - b * std::log(b);
}

// For f = log (concave), the remainder with flipped sign: -E_log(a|b) >= 0.
inline double bregman_log(double a, double b) {
  return std::log(a) - (a - b) / b - std::log(b);
}

inline double bregman_square(double a, double b) { return (a - b) * (a - b); }

}  // namespace nsfbox

#endif
