#ifndef NSFBOX_GEOMETRY_HPP
#define NSFBOX_GEOMETRY_HPP

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>

namespace nsfbox {

enum class ShapeKind { Full, Empty, Ball, Ellipse, Box };

// Fluid region on the torus [0,L)^D. `inside` is a strict test, so boundary
// points count as exterior; membership is evaluated through the minimal-image
// displacement, which is the correct metric on the torus as long as the shape
// has clearance from its own periodic copies (checked in validate()).
template <int D>
struct FluidShape {
  ShapeKind kind = ShapeKind::Full;
  double L = 1.0;
  std::array<double, D> center{};
  std::array<double, D> radii{};  // ball: radii[0]; box: half-widths

  bool inside(const std::array<double, D>& x) const {
    switch (kind) {
      case ShapeKind::Full:
        return true;
      case ShapeKind::Empty:
        return false;
      case ShapeKind::Ball: {
        double q = 0.0;
        for (int a = 0; a < D; ++a) {
          double d = min_image(x[a] - center[a]);
          q += d * d;
        }
        return q < radii[0] * radii[0];
      }
      case ShapeKind::Ellipse: {
        double q = 0.0;
        for (int a = 0; a < D; ++a) {
          double d = min_image(x[a] - center[a]) / radii[a];
          q += d * d;
        }
        return q < 1.0;
      }
      case ShapeKind::Box: {
        for (int a = 0; a < D; ++a) {
          if (!(std::fabs(min_image(x[a] - center[a])) < radii[a])) return false;
        }
        return true;
      }
    }
    return false;
  }

  // Normalized interior coordinate: 0 at the center, 1 on the boundary.
  // Full-torus shapes have no boundary; callers use bump_full instead.
  double boundary_q(const std::array<double, D>& x) const {
    switch (kind) {
      case ShapeKind::Ball: {
        double q = 0.0;
        for (int a = 0; a < D; ++a) {
          double d = min_image(x[a] - center[a]);
          q += d * d;
        }
        return std::sqrt(q) / radii[0];
      }
      case ShapeKind::Ellipse: {
        double q = 0.0;
        for (int a = 0; a < D; ++a) {
          double d = min_image(x[a] - center[a]) / radii[a];
          q += d * d;
        }
        return std::sqrt(q);
      }
      case ShapeKind::Box: {
        double q = 0.0;
        for (int a = 0; a < D; ++a)
          q = std::max(q, std::fabs(min_image(x[a] - center[a])) / radii[a]);
        return q;
      }
      default:
        return 0.0;
    }
  }

  double feature_size() const {
    switch (kind) {
      case ShapeKind::Full:
      case ShapeKind::Empty:
        return std::numeric_limits<double>::infinity();
      case ShapeKind::Ball:
        return radii[0];
      case ShapeKind::Ellipse:
      case ShapeKind::Box: {
        double m = radii[0];
        for (int a = 1; a < D; ++a) m = std::min(m, radii[a]);
        return m;
      }
    }
    return 0.0;
  }

  // Separation between the shape and its nearest periodic copy.
  double clearance() const {
    if (kind == ShapeKind::Full || kind == ShapeKind::Empty)
      return std::numeric_limits<double>::infinity();
    double m = std::numeric_limits<double>::infinity();
    for (int a = 0; a < D; ++a) {
      double r = (kind == ShapeKind::Ball) ? radii[0] : radii[a];
      m = std::min(m, L - 2.0 * r);
    }
    return m;
  }

  // Resolution check: feature size and periodic clearance both at least 2h.
  void validate(double h) const {
    if (kind == ShapeKind::Full || kind == ShapeKind::Empty) return;
    for (int a = 0; a < D; ++a) {
      double r = (kind == ShapeKind::Ball && a > 0) ? radii[0] : radii[a];
      if (!(r > 0.0)) throw std::invalid_argument("shape: radii must be positive");
    }
    if (feature_size() < 2.0 * h)
      throw std::invalid_argument("shape: feature size " + std::to_string(feature_size()) +
                                  " under-resolved, need at least 2h = " + std::to_string(2.0 * h));
    if (clearance() < 2.0 * h)
      throw std::invalid_argument("shape: periodic clearance " + std::to_string(clearance()) +
                                  " too small, need at least 2h");
  }

  double min_image(double d) const {
    d = std::remainder(d, L);
    return d;
  }
};

template <int D>
FluidShape<D> make_ball(double L, const std::array<double, D>& center, double radius) {
  FluidShape<D> s;
  s.kind = ShapeKind::Ball;
  s.L = L;
  s.center = center;
  s.radii.fill(radius);
  return s;
}

template <int D>
FluidShape<D> make_full(double L) {
  FluidShape<D> s;
  s.kind = ShapeKind::Full;
  s.L = L;
  return s;
}

template <int D>
FluidShape<D> make_empty(double L) {
  FluidShape<D> s;
  s.kind = ShapeKind::Empty;
  s.L = L;
  return s;
}

template <int D>
FluidShape<D> make_ellipse(double L, const std::array<double, D>& center,
                           const std::array<double, D>& radii) {
  FluidShape<D> s;
  s.kind = ShapeKind::Ellipse;
  s.L = L;
  s.center = center;
  s.radii = radii;
  return s;
}

template <int D>
FluidShape<D> make_box(double L, const std::array<double, D>& center,
                       const std::array<double, D>& halfwidth) {
  FluidShape<D> s;
  s.kind = ShapeKind::Box;
  s.L = L;
  s.center = center;
  s.radii = halfwidth;
  return s;
}

// Pointwise data triple extended across the whole torus: fluid-side fields
// inside the shape, the prescribed solid state (rho_s, 0, theta_B) outside.
// theta_B is defined on all of the torus so penalty terms and diagnostic
// weights can sample it anywhere.
template <int D>
struct ExtendedTriple {
  using Point = std::array<double, D>;
  const FluidShape<D>* shape = nullptr;
  std::function<double(const Point&)> rho_fluid;
  std::function<std::array<double, D>(const Point&)> u_fluid;
  std::function<double(const Point&)> theta_fluid;
  std::function<double(const Point&)> rho_solid;
  std::function<double(const Point&)> theta_wall;

  double rho(const Point& x) const { return shape->inside(x) ? rho_fluid(x) : rho_solid(x); }
  double theta(const Point& x) const { return shape->inside(x) ? theta_fluid(x) : theta_wall(x); }
  std::array<double, D> u(const Point& x) const {
    if (shape->inside(x)) return u_fluid(x);
    std::array<double, D> z{};
    return z;
  }
};

}  // namespace nsfbox

#endif
