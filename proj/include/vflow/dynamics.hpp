#pragma once

#include <random>
#include <string>
#include <vector>

#include "vflow/front.hpp"
#include "vflow/rheology.hpp"
#include "vflow/thermo.hpp"

namespace vflow {

// Galerkin momentum dynamics: band-limited velocity, density-weighted mass
// operator, RHS assembled from convection, pressure, proximal viscous
// stress, varifold surface tension and spectral hyperviscosity.  Time
// stepping is first-order splitting: transport with the current velocity,
// then one explicit momentum update against the transported state.

struct StepConfig {
  double dt = 1e-3;
  int N = 8;          // Galerkin band limit
  double eps = 1e-3;  // Moreau parameter
  double delta = 0;   // hyperviscosity coefficient
  int m = 5;          // hyperviscosity order
  double kappa = 0;   // surface tension
  double t_end = 0;

  void validate(const PeriodicGrid& g) const {
    if (!(dt > 0) || !(eps > 0) || delta < 0 || kappa < 0)
      throw NumericFailure("step config needs dt > 0, eps > 0, delta/kappa >= 0");
    if (delta > 0 && m < 5)
      throw NumericFailure("hyperviscosity order must be >= 5 in d = 2");
    if (N < 1 || 3 * N > g.n())
      throw NumericFailure("band limit must satisfy 1 <= N <= n/3");
  }
};

struct Materials {
  MixturePotential potential;
  MixturePressure pressure;
};

struct EnergyLedger {
  double kinetic = 0;
  double internal = 0;
  double interface = 0;
  double dissipated_cum = 0;
  double hyper_cum = 0;

  double total() const { return kinetic + internal + interface; }
};

struct SimState {
  double time = 0;
  ScalarField rho;
  ScalarField chi;
  VectorField u;
  MarkerCurve curve;  // empty points => single phase, chi is fixed
  double dissipated_cum = 0;
  double hyper_cum = 0;
  double initial_energy = 0;
  int step_index = 0;

  bool has_curve() const { return !curve.points.empty(); }
};

namespace detail {

inline int chi_at(const ScalarField& chi, int ix, int iy) {
  return chi(ix, iy) != 0.0 ? 1 : 0;
}

inline VectorField add(const VectorField& a, const VectorField& b,
                       double scale_b = 1.0) {
  const PeriodicGrid g = a.grid();
  std::vector<double> x(g.size()), y(g.size());
  for (int i = 0; i < g.size(); ++i) {
    x[i] = a.x().values()[i] + scale_b * b.x().values()[i];
    y[i] = a.y().values()[i] + scale_b * b.y().values()[i];
  }
  return {ScalarField(g, std::move(x)), ScalarField(g, std::move(y))};
}

// Nodal proximal stress of the mixture potential applied to D(u).
inline SymTensorField stress_field(const ScalarField& chi,
                                   const SymTensorField& du,
                                   const MixturePotential& pot, double eps) {
  const PeriodicGrid g = chi.grid();
  std::vector<double> xx(g.size()), xy(g.size()), yy(g.size());
  parallel_for(0, g.size(), [&](int i) {
    const int ix = i / g.n(), iy = i % g.n();
    const SymTensor2 s =
        mixture_prox(pot, chi_at(chi, ix, iy), du(ix, iy), eps).stress;
    xx[i] = s.dxx;
    xy[i] = s.dxy;
    yy[i] = s.dyy;
  });
  return {ScalarField(g, std::move(xx)), ScalarField(g, std::move(xy)),
          ScalarField(g, std::move(yy))};
}

// Representer of the surface-tension functional: the band-limited vector
// field G with <G, phi> = kappa sum_j w_j (I - z z^T) : grad phi(x_j) for
// every band-limited phi, built mode by mode from the atom list.
inline VectorField surface_representer(const DiscreteVarifold& v,
                                       const PeriodicGrid& g, int N,
                                       double kappa) {
  const int n = g.n();
  std::vector<cplx> hx(g.size(), 0.0), hy(g.size(), 0.0);
  const cplx minus_two_pi_i(0.0, -2.0 * M_PI);
  for (const auto& a : v.atoms) {
    // Phase recurrences e^{-2 pi i k x} for k = -N..N along each axis.
    const cplx ex = std::exp(cplx(0.0, -2.0 * M_PI * a.x.x));
    const cplx ey = std::exp(cplx(0.0, -2.0 * M_PI * a.x.y));
    std::vector<cplx> px(2 * N + 1), py(2 * N + 1);
    px[N] = 1.0;
    py[N] = 1.0;
    for (int k = 1; k <= N; ++k) {
      px[N + k] = px[N + k - 1] * ex;
      px[N - k] = px[N - k + 1] / ex;
      py[N + k] = py[N + k - 1] * ey;
      py[N - k] = py[N - k + 1] / ey;
    }
    // A = I - z z^T
    const double axx = 1.0 - a.z.x * a.z.x, axy = -a.z.x * a.z.y,
                 ayy = 1.0 - a.z.y * a.z.y;
    for (int k1 = -N; k1 <= N; ++k1)
      for (int k2 = -N; k2 <= N; ++k2) {
        const cplx phase = px[N + k1] * py[N + k2];
        const cplx f = kappa * a.w * minus_two_pi_i * phase;
        const int idx = g.index((k1 + n) % n, (k2 + n) % n);
        hx[idx] += f * (axx * k1 + axy * k2);
        hy[idx] += f * (axy * k1 + ayy * k2);
      }
  }
  return {ScalarField::from_spectrum(g, std::move(hx)),
          ScalarField::from_spectrum(g, std::move(hy))};
}

}  // namespace detail

// Momentum RHS representer: the band-limited G with <G, phi> equal to
//   int rho u (x) u : grad phi + int p div phi - int stress : D phi
//   + kappa <dV; phi> - delta int Lap^m u . Lap^m phi
// for every test mode phi with band limit N.
inline VectorField assemble_rhs(const ScalarField& rho, const ScalarField& chi,
                                const VectorField& u,
                                const DiscreteVarifold* varifold,
                                const Materials& mat, const StepConfig& cfg) {
  const PeriodicGrid g = rho.grid();

  // Convection: G1 = -div(rho u (x) u), dealiased pairwise.
  const ScalarField mx = dealias(multiply(rho, u.x()));
  const ScalarField my = dealias(multiply(rho, u.y()));
  const ScalarField txx = dealias(multiply(mx, u.x()));
  const ScalarField txy = dealias(multiply(mx, u.y()));
  const ScalarField tyy = dealias(multiply(my, u.y()));
  VectorField rhs(g);
  {
    std::vector<double> gx(g.size()), gy(g.size());
    const ScalarField dxx = derivative(txx, 0), dxy_y = derivative(txy, 1);
    const ScalarField dxy_x = derivative(txy, 0), dyy = derivative(tyy, 1);
    for (int i = 0; i < g.size(); ++i) {
      gx[i] = -(dxx.values()[i] + dxy_y.values()[i]);
      gy[i] = -(dxy_x.values()[i] + dyy.values()[i]);
    }
    rhs = {ScalarField(g, std::move(gx)), ScalarField(g, std::move(gy))};
  }

  // Pressure: G2 = -grad p(chi, rho).
  {
    std::vector<double> pv(g.size());
    parallel_for(0, g.size(), [&](int i) {
      pv[i] = mixture_pressure(mat.pressure, detail::chi_at(chi, i / g.n(), i % g.n()),
                               rho.values()[i]);
    });
    const VectorField gp = gradient(ScalarField(g, std::move(pv)));
    rhs = detail::add(rhs, gp, -1.0);
  }

  // Viscous stress: G3 = div S with S the nodal proximal stress.
  {
    const SymTensorField s =
        detail::stress_field(chi, sym_gradient(u), mat.potential, cfg.eps);
    const ScalarField sx = derivative(s.xx(), 0), sxy_y = derivative(s.xy(), 1);
    const ScalarField sxy_x = derivative(s.xy(), 0), sy = derivative(s.yy(), 1);
    std::vector<double> gx(g.size()), gy(g.size());
    for (int i = 0; i < g.size(); ++i) {
      gx[i] = sx.values()[i] + sxy_y.values()[i];
      gy[i] = sxy_x.values()[i] + sy.values()[i];
    }
    rhs = detail::add(rhs, {ScalarField(g, std::move(gx)),
                            ScalarField(g, std::move(gy))});
  }

  // Surface tension through the varifold atoms.
  if (varifold && cfg.kappa > 0)
    rhs = detail::add(
        rhs, detail::surface_representer(*varifold, g, cfg.N, cfg.kappa));

  // Hyperviscosity tail damper.
  if (cfg.delta > 0)
    rhs = detail::add(rhs, hyper_apply(u, cfg.m, cfg.delta), -1.0);

  return project_bandlimit(rhs, cfg.N);
}

// Solves <rho w, phi> = <g, phi> for all modes with band limit N by
// conjugate gradients on the SPD operator w -> P_N(rho w).
inline VectorField solve_weighted_projection(const ScalarField& rho,
                                             const VectorField& g_repr,
                                             int N) {
  const PeriodicGrid g = rho.grid();
  for (double v : rho.values())
    if (!(v > 0)) throw NumericFailure("weighted solve requires rho > 0");

  auto apply = [&](const VectorField& w) {
    return project_bandlimit(
        VectorField{multiply(rho, w.x()), multiply(rho, w.y())}, N);
  };

  const VectorField b = project_bandlimit(g_repr, N);
  const double bnorm = std::sqrt(inner(b, b));
  VectorField x(g);
  if (bnorm == 0) return x;
  VectorField r = b, p = b;
  double rs = inner(r, r);
  const int max_iters = 10 * 2 * (2 * N + 1) * (2 * N + 1);
  for (int it = 0; it < max_iters; ++it) {
    const VectorField ap = apply(p);
    const double alpha = rs / inner(p, ap);
    x = detail::add(x, p, alpha);
    r = detail::add(r, ap, -alpha);
    const double rs_new = inner(r, r);
    if (std::sqrt(rs_new) <= 1e-10 * bnorm) return x;
    p = detail::add(r, p, rs_new / rs);
    rs = rs_new;
  }
  throw IterationLimit("weighted projection failed to converge (vacuum?)");
}

// One splitting step: transport everything with the current velocity, then
// advance the momentum explicitly against the transported state.  The
// dissipation quadratures are taken at the pre-step state.
inline SimState step(const SimState& s, const Materials& mat,
                     const StepConfig& cfg) {
  const PeriodicGrid g = s.rho.grid();
  cfg.validate(g);

  // Transport substep count from the CFL guard.
  double umax = 0;
  for (int i = 0; i < g.size(); ++i)
    umax = std::max(umax, Vec2{s.u.x().values()[i], s.u.y().values()[i]}.norm());
  const int substeps =
      std::max(1, static_cast<int>(std::ceil(cfg.dt * umax / (0.25 * g.h()))));
  const CharacteristicConfig ccfg{substeps, 0.5 * g.h()};
  const VelocitySegment seg =
      VelocitySegment::steady(s.u, s.time, s.time + cfg.dt);

  SimState next = s;
  next.rho = transport_density(s.rho, seg, ccfg);
  if (s.has_curve()) {
    next.curve = advect_markers(s.curve, seg, ccfg, s.step_index);
    next.chi = rasterize_chi(next.curve, g);
  }

  // Momentum update against the transported state (Lie splitting).
  DiscreteVarifold vf;
  if (s.has_curve() && cfg.kappa > 0) vf = varifold_from_curve(next.curve);
  const VectorField rhs =
      assemble_rhs(next.rho, next.chi, s.u,
                   (s.has_curve() && cfg.kappa > 0) ? &vf : nullptr, mat, cfg);
  const VectorField momentum = project_bandlimit(
      VectorField{multiply(s.rho, s.u.x()), multiply(s.rho, s.u.y())}, cfg.N);
  next.u = solve_weighted_projection(next.rho,
                                     detail::add(momentum, rhs, cfg.dt), cfg.N);

  // Ledger terms at the pre-step state.
  const SymTensorField du = sym_gradient(s.u);
  double diss = 0;
  {
    std::vector<double> node(g.size());
    parallel_for(0, g.size(), [&](int i) {
      const int ix = i / g.n(), iy = i % g.n();
      const SymTensor2 d = du(ix, iy);
      node[i] =
          mixture_prox(mat.potential, detail::chi_at(s.chi, ix, iy), d, cfg.eps)
              .stress.contract(d);
    });
    for (double v : node) diss += v;
    diss *= g.h() * g.h();
  }
  next.dissipated_cum = s.dissipated_cum + cfg.dt * diss;
  next.hyper_cum =
      s.hyper_cum +
      (cfg.delta > 0 ? cfg.dt * cfg.delta * hyper_energy(s.u, cfg.m) : 0.0);
  next.time = s.time + cfg.dt;
  next.step_index = s.step_index + 1;
  return next;
}

struct EnergyReport {
  EnergyLedger ledger;
  double balance_residual = 0;  // E(t) - E(0) + dissipated + hyper; <= 0 + tol
};

inline EnergyReport energy_report(const SimState& s, const Materials& mat,
                                  const StepConfig& cfg) {
  const PeriodicGrid g = s.rho.grid();
  EnergyReport rep;
  double kin = 0, intern = 0;
  for (int ix = 0; ix < g.n(); ++ix)
    for (int iy = 0; iy < g.n(); ++iy) {
      const double r = s.rho(ix, iy);
      const Vec2 uv = s.u(ix, iy);
      kin += 0.5 * r * (uv.x * uv.x + uv.y * uv.y);
      intern +=
          mixture_potential(mat.pressure, detail::chi_at(s.chi, ix, iy), r);
    }
  rep.ledger.kinetic = kin * g.h() * g.h();
  rep.ledger.internal = intern * g.h() * g.h();
  rep.ledger.interface =
      (s.has_curve() && cfg.kappa > 0) ? cfg.kappa * perimeter(s.curve) : 0.0;
  rep.ledger.dissipated_cum = s.dissipated_cum;
  rep.ledger.hyper_cum = s.hyper_cum;
  rep.balance_residual = rep.ledger.total() - s.initial_energy +
                         s.dissipated_cum + s.hyper_cum;
  return rep;
}

// Builds a consistent initial state: band-limits u, rasterizes the curve,
// and records the initial total energy for the balance residual.
inline SimState make_state(ScalarField rho, VectorField u, MarkerCurve curve,
                           ScalarField chi_fixed, const Materials& mat,
                           const StepConfig& cfg) {
  const PeriodicGrid g = rho.grid();
  cfg.validate(g);
  for (double v : rho.values())
    if (!(v > 0)) throw NumericFailure("initial density must be positive");
  SimState s{0.0,
             std::move(rho),
             std::move(chi_fixed),
             project_bandlimit(u, cfg.N),
             std::move(curve),
             0.0,
             0.0,
             0.0,
             0};
  if (s.has_curve()) s.chi = rasterize_chi(s.curve, g);
  s.initial_energy = energy_report(s, mat, cfg).ledger.total();
  return s;
}

// Advisory classification of a scenario against the two supported existence
// theorems: TH1 (no surface tension, superquadratic growth, comparable
// phases) and TH3 (isothermal pressure, any kappa >= 0).
struct HypothesisReport {
  bool th1 = false;
  bool th3 = false;
  std::vector<std::string> violations_th1;
  std::vector<std::string> violations_th3;
};

inline HypothesisReport hypothesis_check(const Materials& mat, double kappa,
                                         std::uint64_t seed = 7) {
  HypothesisReport rep;
  if (kappa != 0)
    rep.violations_th1.push_back("surface tension must be zero");
  const PotentialProfile p1 = flatten(*mat.potential.f1);
  const PotentialProfile p2 = flatten(*mat.potential.f2);
  for (const auto* p : {&p1, &p2}) {
    const double alpha = p->power ? p->alpha : 2.0;
    if (alpha < 2.0)
      rep.violations_th1.push_back("dissipation growth exponent below 2");
  }
  {
    // Sampled comparability of the two phase potentials.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<SymTensor2> samples;
    const double r0 = std::min(domain_radius(*mat.potential.f1),
                               domain_radius(*mat.potential.f2));
    const double scale = std::min(1.0, 0.5 * r0);
    for (int i = 0; i < 200; ++i)
      samples.push_back(SymTensor2{u(rng), u(rng), u(rng)} * scale);
    MixturePotential probe = mat.potential;
    if (probe.comparability_k <= 0) probe.comparability_k = 4.0;
    const auto cmp = check_comparability(probe, samples);
    if (!cmp.holds)
      rep.violations_th1.push_back("phase potentials not comparable");
  }
  rep.th1 = rep.violations_th1.empty();

  if (!is_isothermal(*mat.pressure.p1) || !is_isothermal(*mat.pressure.p2))
    rep.violations_th3.push_back("pressure law not isothermal");
  if (!(domain_radius(*mat.potential.f1) > 0) ||
      !(domain_radius(*mat.potential.f2) > 0))
    rep.violations_th3.push_back("0 not interior to the potential domain");
  rep.th3 = rep.violations_th3.empty();
  return rep;
}

}  // namespace vflow
