#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <variant>
#include <vector>

#include "vflow/common.hpp"

namespace vflow {

// Barotropic pressure laws p(rho) and their pressure potentials P(rho)
// normalized by P(1) = 0, so that P'(rho) rho - P(rho) = p(rho).

struct Isothermal {
  double a = 1;  // p(rho) = a rho
};

// Monotone cubic (Fritsch-Carlson) interpolant through increasing nodes.
struct TabulatedMonotone {
  std::vector<double> rho_nodes;
  std::vector<double> p_values;
  std::vector<double> slopes;  // limited tangents, filled at construction
};

struct PressureLaw {
  std::variant<Isothermal, TabulatedMonotone> family;

  static std::shared_ptr<const PressureLaw> isothermal(double a) {
    if (!(a > 0)) throw NumericFailure("isothermal coefficient must be > 0");
    return std::make_shared<PressureLaw>(PressureLaw{Isothermal{a}});
  }
  static std::shared_ptr<const PressureLaw> tabulated(
      std::vector<double> rho_nodes, std::vector<double> p_values);
};

using PressurePtr = std::shared_ptr<const PressureLaw>;

inline PressurePtr PressureLaw::tabulated(std::vector<double> rho_nodes,
                                          std::vector<double> p_values) {
  const size_t n = rho_nodes.size();
  if (n < 2 || p_values.size() != n)
    throw NumericFailure("tabulated law needs >= 2 matching nodes");
  for (size_t i = 0; i + 1 < n; ++i) {
    if (!(rho_nodes[i] > 0) || rho_nodes[i + 1] <= rho_nodes[i])
      throw NumericFailure("tabulated rho nodes must be positive increasing");
    if (p_values[i + 1] < p_values[i])
      throw NumericFailure("tabulated pressure must be nondecreasing");
  }
  if (p_values.front() < 0) throw NumericFailure("pressure must be >= 0");

  TabulatedMonotone t;
  t.rho_nodes = std::move(rho_nodes);
  t.p_values = std::move(p_values);
  // Fritsch-Carlson tangent limiting keeps the interpolant monotone.
  std::vector<double> d(n - 1);
  for (size_t i = 0; i + 1 < n; ++i)
    d[i] = (t.p_values[i + 1] - t.p_values[i]) /
           (t.rho_nodes[i + 1] - t.rho_nodes[i]);
  t.slopes.resize(n);
  t.slopes[0] = d[0];
  t.slopes[n - 1] = d[n - 2];
  for (size_t i = 1; i + 1 < n; ++i)
    t.slopes[i] = (d[i - 1] * d[i] <= 0) ? 0.0 : 0.5 * (d[i - 1] + d[i]);
  for (size_t i = 0; i + 1 < n; ++i) {
    if (d[i] == 0) {
      t.slopes[i] = t.slopes[i + 1] = 0;
      continue;
    }
    const double a = t.slopes[i] / d[i], b = t.slopes[i + 1] / d[i];
    const double s = a * a + b * b;
    if (s > 9.0) {
      const double scale = 3.0 / std::sqrt(s);
      t.slopes[i] = scale * a * d[i];
      t.slopes[i + 1] = scale * b * d[i];
    }
  }
  return std::make_shared<PressureLaw>(PressureLaw{std::move(t)});
}

namespace detail {

inline double hermite(const TabulatedMonotone& t, double rho) {
  const auto& x = t.rho_nodes;
  if (rho < x.front() || rho > x.back())
    throw OutOfRange("rho outside tabulated range");
  size_t i = std::upper_bound(x.begin(), x.end(), rho) - x.begin();
  if (i > 0) --i;
  if (i + 1 >= x.size()) i = x.size() - 2;
  const double h = x[i + 1] - x[i];
  const double s = (rho - x[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * t.p_values[i] +
         (s3 - 2 * s2 + s) * h * t.slopes[i] +
         (-2 * s3 + 3 * s2) * t.p_values[i + 1] +
         (s3 - s2) * h * t.slopes[i + 1];
}

// Adaptive Simpson quadrature.
template <class F>
double simpson_adaptive(F&& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return simpson_adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <class F>
double integrate_adaptive(F&& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4 * fm + fb);
  return simpson_adaptive(f, a, b, fa, fm, fb, whole, tol, 48);
}

// 16-point Gauss-Legendre on [a,b]; exact to roundoff for the smooth
// per-interval pieces below and, unlike adaptive quadrature, smooth in the
// endpoints (needed so P stays cleanly differentiable in rho).
template <class F>
double gauss16(F&& f, double a, double b) {
  static const double xs[8] = {
      0.0950125098376374, 0.2816035507792589, 0.4580167776572274,
      0.6178762444026438, 0.7554044083550030, 0.8656312023878318,
      0.9445750230732326, 0.9894009349916499};
  static const double ws[8] = {
      0.1894506104550685, 0.1826034150449236, 0.1691565193950025,
      0.1495959888165767, 0.1246289712555339, 0.0951585116824928,
      0.0622535239386477, 0.0271524594117540};
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  double sum = 0;
  for (int i = 0; i < 8; ++i)
    sum += ws[i] * (f(c - hw * xs[i]) + f(c + hw * xs[i]));
  return hw * sum;
}

// Integral of the table integrand over [a,b] (signed), split at table nodes
// so each quadrature piece sees a single smooth cubic.
template <class F>
double integrate_piecewise(F&& f, const std::vector<double>& nodes, double a,
                           double b) {
  const double sign = (a <= b) ? 1.0 : -1.0;
  if (a > b) std::swap(a, b);
  double total = 0, lo = a;
  for (double x : nodes) {
    if (x <= lo) continue;
    if (x >= b) break;
    total += gauss16(f, lo, x);
    lo = x;
  }
  total += gauss16(f, lo, b);
  return sign * total;
}

}  // namespace detail

inline double pressure(const PressureLaw& law, double rho) {
  if (!(rho > 0)) throw OutOfRange("pressure requires rho > 0");
  if (const auto* iso = std::get_if<Isothermal>(&law.family))
    return iso->a * rho;
  return detail::hermite(std::get<TabulatedMonotone>(law.family), rho);
}

// P(rho) = rho * int_1^rho p(z)/z^2 dz, the unique solution of
// P' rho - P = p with P(1) = 0.
inline double pressure_potential(const PressureLaw& law, double rho) {
  if (!(rho > 0)) throw OutOfRange("pressure_potential requires rho > 0");
  if (const auto* iso = std::get_if<Isothermal>(&law.family))
    return iso->a * rho * std::log(rho);
  const auto& t = std::get<TabulatedMonotone>(law.family);
  auto integrand = [&](double z) { return detail::hermite(t, z) / (z * z); };
  // Integration path must stay inside the table; the normalization point 1
  // is clamped to the node range if needed.
  double base = std::clamp(1.0, t.rho_nodes.front(), t.rho_nodes.back());
  if (rho < t.rho_nodes.front() || rho > t.rho_nodes.back())
    throw OutOfRange("rho outside tabulated range");
  return rho * detail::integrate_piecewise(integrand, t.rho_nodes, base, rho);
}

struct MixturePressure {
  PressurePtr p1;
  PressurePtr p2;
  const PressureLaw& select(int chi) const { return chi ? *p1 : *p2; }
};

inline double mixture_pressure(const MixturePressure& m, int chi, double rho) {
  return pressure(m.select(chi), rho);
}

inline double mixture_potential(const MixturePressure& m, int chi, double rho) {
  return pressure_potential(m.select(chi), rho);
}

inline bool is_isothermal(const PressureLaw& law) {
  return std::holds_alternative<Isothermal>(law.family);
}

}  // namespace vflow
