#pragma once

#include <atomic>
#include <cmath>
#include <functional>

#include "vflow/fields.hpp"

namespace vflow {

// Lagrangian characteristics of a velocity segment and the semi-Lagrangian
// transport rho(t1, x) = rho(t0, foot(x)) exp(-int div u along the path);
// the indicator is carried by nearest-node lookup so its values stay in
// {0, 1} exactly.

// Velocity on a time slab [t0, t1], linear in time between the two endpoint
// samples; divergence fields are precomputed spectrally.
struct VelocitySegment {
  VectorField u0, u1;
  ScalarField div0, div1;
  double t0 = 0, t1 = 0;
  bool steady_slab = false;  // u1 == u0, skip the second interpolation

  VelocitySegment(VectorField a, VectorField b, double ta, double tb)
      : u0(std::move(a)),
        u1(std::move(b)),
        div0(divergence(u0)),
        div1(divergence(u1)),
        t0(ta),
        t1(tb) {
    if (!(u0.grid() == u1.grid()))
      throw NumericFailure("segment endpoint grids differ");
    if (!(t0 <= t1)) throw NumericFailure("segment needs t0 <= t1");
  }
  static VelocitySegment steady(const VectorField& u, double ta, double tb) {
    VelocitySegment s{u, u, ta, tb};
    s.steady_slab = true;
    return s;
  }

  // theta in [0,1] is the position inside the slab.
  Vec2 velocity(Vec2 p, double theta) const {
    const Vec2 a = interpolate(u0, p);
    if (steady_slab) return a;
    const Vec2 b = interpolate(u1, p);
    return {a.x + theta * (b.x - a.x), a.y + theta * (b.y - a.y)};
  }
  double div(Vec2 p, double theta) const {
    const double a = interpolate(div0, p);
    if (steady_slab) return a;
    const double b = interpolate(div1, p);
    return a + theta * (b - a);
  }
};

struct CharacteristicConfig {
  int substeps = 1;
  double max_displacement = 0;  // per-substep guard, fraction of the domain

  static CharacteristicConfig for_grid(const PeriodicGrid& g, int substeps) {
    if (substeps < 1) throw NumericFailure("substeps must be >= 1");
    return {substeps, 0.5 * g.h()};
  }
};

namespace detail {

struct FootResult {
  Vec2 foot;      // X(t0), wrapped into [0,1)^2
  double divint;  // int_{t0}^{t1} div u(s, X(s)) ds along the path
  bool cfl_ok = true;
};

// Backward RK4 from (t1, x) to t0.  The divergence line integral is
// accumulated per substep with Simpson weights, using the second RK4 stage
// point as the midpoint position (accurate to O(tau^2), enough to keep the
// quadrature at the scheme's overall order).
inline FootResult backward_path(const VelocitySegment& seg, Vec2 x,
                                const CharacteristicConfig& cfg) {
  FootResult out;
  const double span = seg.t1 - seg.t0;
  const int m = cfg.substeps;
  const double tau = span / m;
  double divint = 0;
  for (int s = 0; s < m; ++s) {
    // theta runs backward from 1 to 0 across the slab.
    const double th1 = 1.0 - static_cast<double>(s) / m;
    const double thm = th1 - 0.5 / m;
    const double th0 = th1 - 1.0 / m;
    const Vec2 k1 = seg.velocity(x, th1);
    const Vec2 p2{x.x - 0.5 * tau * k1.x, x.y - 0.5 * tau * k1.y};
    const Vec2 k2 = seg.velocity(p2, thm);
    const Vec2 p3{x.x - 0.5 * tau * k2.x, x.y - 0.5 * tau * k2.y};
    const Vec2 k3 = seg.velocity(p3, thm);
    const Vec2 p4{x.x - tau * k3.x, x.y - tau * k3.y};
    const Vec2 k4 = seg.velocity(p4, th0);
    const double dx = (tau / 6.0) * (k1.x + 2 * k2.x + 2 * k3.x + k4.x);
    const double dy = (tau / 6.0) * (k1.y + 2 * k2.y + 2 * k3.y + k4.y);
    if (cfg.max_displacement > 0 &&
        std::sqrt(dx * dx + dy * dy) > cfg.max_displacement) {
      out.cfl_ok = false;
      out.foot = x;
      out.divint = divint;
      return out;
    }
    const Vec2 xn{x.x - dx, x.y - dy};
    divint += (tau / 6.0) *
              (seg.div(x, th1) + 4.0 * seg.div(p3, thm) + seg.div(xn, th0));
    x = xn;
  }
  out.foot = {wrap01(x.x), wrap01(x.y)};
  out.divint = divint;
  return out;
}

}  // namespace detail

inline Vec2 backward_foot(const VelocitySegment& seg, Vec2 x,
                          const CharacteristicConfig& cfg) {
  const auto r = detail::backward_path(seg, x, cfg);
  if (!r.cfl_ok)
    throw CflViolation("characteristic substep displacement exceeds guard");
  return r.foot;
}

namespace detail {

// Runs backward_path on every node in parallel, then reports any CFL
// violation as a single exception on the calling thread.
template <class Body>
void transport_grid(const VelocitySegment& seg, const PeriodicGrid& g,
                    const CharacteristicConfig& cfg, Body&& body) {
  std::atomic<bool> violated{false};
  parallel_for(0, g.size(), [&](int i) {
    const int ix = i / g.n(), iy = i % g.n();
    const auto r = backward_path(seg, g.node(ix, iy), cfg);
    if (!r.cfl_ok) {
      violated.store(true, std::memory_order_relaxed);
      return;
    }
    body(i, r);
  });
  if (violated.load())
    throw CflViolation("characteristic substep displacement exceeds guard");
}

}  // namespace detail

inline ScalarField transport_density(const ScalarField& rho_prev,
                                     const VelocitySegment& seg,
                                     const CharacteristicConfig& cfg) {
  const PeriodicGrid g = rho_prev.grid();
  std::vector<double> out(g.size());
  detail::transport_grid(seg, g, cfg, [&](int i, const detail::FootResult& r) {
    const InterpSample s = interpolate_guarded(rho_prev, r.foot);
    // Bicubic undershoot cannot drop below the stencil minimum; this keeps
    // positive densities positive.
    const double val = std::max(s.value, s.stencil_min);
    out[i] = val * std::exp(-r.divint);
  });
  return ScalarField(g, std::move(out));
}

inline ScalarField transport_indicator_grid(const ScalarField& chi_prev,
                                            const VelocitySegment& seg,
                                            const CharacteristicConfig& cfg) {
  const PeriodicGrid g = chi_prev.grid();
  std::vector<double> out(g.size());
  detail::transport_grid(seg, g, cfg, [&](int i, const detail::FootResult& r) {
    const int jx = g.wrap(static_cast<int>(std::lround(r.foot.x * g.n())));
    const int jy = g.wrap(static_cast<int>(std::lround(r.foot.y * g.n())));
    out[i] = chi_prev(jx, jy);
  });
  return ScalarField(g, std::move(out));
}

// One transported time slab with the advected scalars at both ends.
struct TrajectorySegment {
  VelocitySegment vel;
  ScalarField rho0, rho1;
  ScalarField chi0, chi1;
};

// Space-time test function: value, time derivative, and spatial gradient.
struct SpaceTimePhi {
  std::function<double(Vec2, double)> value;
  std::function<double(Vec2, double)> dt;
  std::function<Vec2(Vec2, double)> grad;

  static SpaceTimePhi constant(double c) {
    return {[c](Vec2, double) { return c; },
            [](Vec2, double) { return 0.0; },
            [](Vec2, double) { return Vec2{0, 0}; }};
  }
};

// Residual of the renormalized identity
//   [int b phi]_{t0}^{t1}
//     = int int b dphi/dt + b u . grad phi + (b - db/drho rho) div u phi,
// discretized with nodal sums in space and the trapezoid rule in time.
// b = b(chi, rho); db is its rho-derivative.
inline double renormalized_residual(
    const TrajectorySegment& traj,
    const std::function<double(double, double)>& b,
    const std::function<double(double, double)>& db,
    const SpaceTimePhi& phi) {
  const PeriodicGrid g = traj.rho0.grid();
  const double h2 = g.h() * g.h();

  auto slab = [&](const ScalarField& rho, const ScalarField& chi,
                  const VectorField& u, const ScalarField& divu, double t,
                  double& boundary, double& interior) {
    double bnd = 0, intr = 0;
    for (int ix = 0; ix < g.n(); ++ix)
      for (int iy = 0; iy < g.n(); ++iy) {
        const Vec2 x = g.node(ix, iy);
        const double r = rho(ix, iy), c = chi(ix, iy);
        const double bv = b(c, r);
        const Vec2 uv = u(ix, iy);
        const Vec2 gp = phi.grad(x, t);
        bnd += bv * phi.value(x, t);
        intr += bv * phi.dt(x, t) + bv * (uv.x * gp.x + uv.y * gp.y) +
                (bv - db(c, r) * r) * divu(ix, iy) * phi.value(x, t);
      }
    boundary = h2 * bnd;
    interior = h2 * intr;
  };

  double b0 = 0, i0 = 0, b1 = 0, i1 = 0;
  slab(traj.rho0, traj.chi0, traj.vel.u0, traj.vel.div0, traj.vel.t0, b0, i0);
  slab(traj.rho1, traj.chi1, traj.vel.u1, traj.vel.div1, traj.vel.t1, b1, i1);
  const double dt = traj.vel.t1 - traj.vel.t0;
  return (b1 - b0) - 0.5 * dt * (i0 + i1);
}

}  // namespace vflow
