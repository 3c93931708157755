#ifndef NSFBOX_TEST_SCALAR_PENALTY_ORACLE_HPP
#define NSFBOX_TEST_SCALAR_PENALTY_ORACLE_HPP

// Closed forms for one backward-Euler step of the penalty relaxation on a
// spatially constant state over an all-solid torus. With every jump zero and
// per-axis flux telescoping exactly, the full scheme collapses to scalar
// equations per cell:
//   density:   rho1 = rho0
//   momentum:  rho*(u - u0)/dt + u/eps = 0
//   energy:    cv*rho*(th - th0)/dt + (th - thB)/eps = 0
// Derived independently of the solver; used to pin its output.

namespace oracle {

inline double penalty_velocity_step(double u0, double rho, double dt,
                                    double eps) {
  return u0 / (1.0 + dt / (rho * eps));
}

inline double penalty_temperature_step(double th0, double thB, double rho,
                                       double cv, double dt, double eps) {
  return (cv * rho * th0 + (dt / eps) * thB) / (cv * rho + dt / eps);
}

// Energy-identity pieces for the same configuration (unit volume factor
// applied by the caller): with th == thB the balance reduces to
//   D_t(rho*|u|^2/2) + |u1|^2/eps = -(dt/2) * rho * |D_t u|^2.
inline double penalty_energy_lhs(double u0, double u1, double rho, double dt,
                                 double eps) {
  return 0.5 * rho * (u1 * u1 - u0 * u0) / dt + u1 * u1 / eps;
}

inline double penalty_energy_rhs(double u0, double u1, double rho, double dt) {
  double du = (u1 - u0) / dt;
  return -(0.5 * dt) * rho * du * du;
}

}  // namespace oracle

#endif
