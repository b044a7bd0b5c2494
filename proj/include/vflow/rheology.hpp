#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "vflow/common.hpp"
#include "vflow/symtensor.hpp"

namespace vflow {

// Extended-real convex dissipation potentials on symmetric 2x2 tensors.
//
// Every supported family is isotropic in the deviatoric direction and
// separable in the orthogonal (dev, trace) split, so each potential reduces
// to a pair of one-dimensional convex profiles:
//   F(D) = g(|dev D|) + q(tr D),  with optional hard bounds
//   |dev D| <= cap_radius  and  tr D <= trace_bound.
// Conjugates and proximal points are computed on these profiles.

struct DissipationPotential;
using PotentialPtr = std::shared_ptr<const DissipationPotential>;

struct Quadratic {
  double mu = 0;      // deviatoric viscosity, F has (mu/2)|dev D|^2
  double lambda = 0;  // bulk term (lambda/2)(tr D)^2
};

struct PowerLaw {
  double mu = 1;
  double alpha = 2;       // deviatoric growth (mu/alpha)|dev D|^alpha, alpha > 1
  double trace_coef = 0;  // quadratic trace term, configurable
};

struct TraceBounded {
  PotentialPtr inner;
  double dbar = 0;  // F = +inf whenever tr D > dbar
};

struct DeviatoricCap {
  PotentialPtr inner;
  double radius = 1;  // F = +inf whenever |dev D| > radius
};

struct DissipationPotential {
  std::variant<Quadratic, PowerLaw, TraceBounded, DeviatoricCap> family;

  static PotentialPtr quadratic(double mu, double lambda) {
    return std::make_shared<DissipationPotential>(
        DissipationPotential{Quadratic{mu, lambda}});
  }
  static PotentialPtr power_law(double mu, double alpha, double trace_coef = 0) {
    if (!(mu > 0) || !(alpha > 1))
      throw NumericFailure("power law requires mu > 0 and alpha > 1");
    return std::make_shared<DissipationPotential>(
        DissipationPotential{PowerLaw{mu, alpha, trace_coef}});
  }
  static PotentialPtr trace_bounded(PotentialPtr inner, double dbar) {
    if (dbar < 0) throw NumericFailure("trace bound must be >= 0");
    return std::make_shared<DissipationPotential>(
        DissipationPotential{TraceBounded{std::move(inner), dbar}});
  }
  static PotentialPtr deviatoric_cap(PotentialPtr inner, double radius) {
    if (!(radius > 0)) throw NumericFailure("deviatoric cap radius must be > 0");
    return std::make_shared<DissipationPotential>(
        DissipationPotential{DeviatoricCap{std::move(inner), radius}});
  }
};

// Flattened 1-D view of a (possibly nested) potential.
struct PotentialProfile {
  bool power = false;   // dev part: (mu/alpha) r^alpha if power, else (mu/2) r^2
  double mu = 0;
  double alpha = 2;
  double lambda = 0;       // trace part (lambda/2) tau^2
  double cap = kInf;       // |dev D| bound
  double trace_bound = kInf;  // tr D upper bound

  double dev_value(double r) const {
    if (r > cap) return kInf;
    return power ? (mu / alpha) * std::pow(r, alpha) : 0.5 * mu * r * r;
  }
  double dev_slope(double r) const {
    return power ? mu * std::pow(r, alpha - 1.0) : mu * r;
  }
  double trace_value(double tau) const {
    if (tau > trace_bound) return kInf;
    return 0.5 * lambda * tau * tau;
  }
};

inline PotentialProfile flatten(const DissipationPotential& f) {
  PotentialProfile p;
  const DissipationPotential* cur = &f;
  for (;;) {
    if (const auto* q = std::get_if<Quadratic>(&cur->family)) {
      p.mu = q->mu;
      p.lambda = q->lambda;
      p.power = false;
      return p;
    }
    if (const auto* pw = std::get_if<PowerLaw>(&cur->family)) {
      p.mu = pw->mu;
      p.alpha = pw->alpha;
      p.lambda = pw->trace_coef;
      p.power = true;
      return p;
    }
    if (const auto* tb = std::get_if<TraceBounded>(&cur->family)) {
      p.trace_bound = std::min(p.trace_bound, tb->dbar);
      cur = tb->inner.get();
      continue;
    }
    const auto& dc = std::get<DeviatoricCap>(cur->family);
    p.cap = std::min(p.cap, dc.radius);
    cur = dc.inner.get();
  }
}

// Radius r0 of a ball around 0 on which F is guaranteed finite.
// tr D <= sqrt(2)|D|, so the trace bound shrinks the ball by sqrt(2).
inline double domain_radius(const DissipationPotential& f) {
  const PotentialProfile p = flatten(f);
  return std::min(p.cap, p.trace_bound / std::sqrt(2.0));
}

inline double eval_potential(const DissipationPotential& f, const SymTensor2& d) {
  const PotentialProfile p = flatten(f);
  const double dv = p.dev_value(dev_norm(d));
  const double tv = p.trace_value(d.trace());
  if (dv == kInf || tv == kInf) return kInf;
  return dv + tv;
}

namespace detail {

// Maximize the concave function obj on [lo, hi] by golden section.
template <class F>
double golden_max(F&& obj, double lo, double hi) {
  constexpr double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = obj(x1), f2 = obj(x2);
  for (int it = 0; it < 200 && (b - a) > 1e-14 * std::max(1.0, std::abs(b)); ++it) {
    if (f1 < f2) {
      a = x1; x1 = x2; f1 = f2;
      x2 = a + phi * (b - a); f2 = obj(x2);
    } else {
      b = x2; x2 = x1; f2 = f1;
      x1 = b - phi * (b - a); f1 = obj(x1);
    }
  }
  return std::max({obj(a), obj(b), std::max(f1, f2)});
}

// sup_{0 <= r <= cap} { s*r - g(r) } for the deviatoric profile.
inline double conj_dev(const PotentialProfile& p, double s) {
  if (s <= 0) return 0.0;  // g >= 0 = g(0), supremum at r = 0
  if (p.cap < kInf) {
    // Bounded domain: one-dimensional numeric maximization.
    auto obj = [&](double r) { return s * r - p.dev_value(r); };
    const double v = golden_max(obj, 0.0, p.cap);
    if (!std::isfinite(v)) throw NumericFailure("conjugate maximization failed");
    return std::max(0.0, v);
  }
  if (p.mu <= 0) return kInf;  // linear growth in r is unopposed
  if (!p.power) return 0.5 * s * s / p.mu;
  const double ap = p.alpha / (p.alpha - 1.0);  // dual exponent
  return std::pow(s, ap) * std::pow(p.mu, 1.0 - ap) / ap;
}

// sup_{tau <= trace_bound} { st*tau - (lambda/2) tau^2 }, st = (tr S)/2.
inline double conj_trace(const PotentialProfile& p, double st) {
  if (p.lambda <= 0) {
    if (st == 0) return 0.0;
    if (st < 0) return kInf;  // tau -> -inf
    return p.trace_bound < kInf ? st * p.trace_bound : kInf;
  }
  double tau = st / p.lambda;
  if (tau > p.trace_bound) tau = p.trace_bound;
  return st * tau - 0.5 * p.lambda * tau * tau;
}

}  // namespace detail

// Convex conjugate F*(S) = sup_D { S:D - F(D) }.  The (dev, trace) split of
// the pairing is S:D = dev S : dev D + (tr S)(tr D)/2.
inline double conjugate(const DissipationPotential& f, const SymTensor2& s) {
  const PotentialProfile p = flatten(f);
  const double cd = detail::conj_dev(p, dev_norm(s));
  const double ct = detail::conj_trace(p, 0.5 * s.trace());
  if (cd == kInf || ct == kInf) return kInf;
  return cd + ct;
}

struct ProxResult {
  SymTensor2 minimizer;
  double envelope_value = 0;  // F^eps(d)
  SymTensor2 stress;          // (d - minimizer)/eps = grad F^eps(d)
};

namespace detail {

// Minimize (r - rd)^2/(2 eps) + g(r) over 0 <= r <= cap.
inline double prox_dev(const PotentialProfile& p, double rd, double eps) {
  double r;
  if (!p.power) {
    r = rd / (1.0 + eps * p.mu);
  } else {
    // Newton on psi'(r) = (r - rd)/eps + mu r^(alpha-1), convex and
    // increasing on [0, rd]; bisection fallback on that bracket.
    double lo = 0.0, hi = rd;
    r = rd / 2.0;
    bool converged = (rd == 0.0);
    if (rd == 0.0) r = 0.0;
    for (int it = 0; it < 64 && !converged; ++it) {
      const double res = (r - rd) / eps + p.mu * std::pow(r, p.alpha - 1.0);
      if (std::abs(res) <= 1e-12 * std::max(1.0, rd / eps)) {
        converged = true;
        break;
      }
      (res > 0 ? hi : lo) = r;
      const double slope =
          1.0 / eps + p.mu * (p.alpha - 1.0) * std::pow(r, p.alpha - 2.0);
      double next = r - res / slope;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      r = next;
    }
    if (!converged && (hi - lo) > 1e-10 * std::max(1.0, rd))
      throw NonConvergence(64);
  }
  // Clamp strictly inside the cap so the minimizer re-evaluates as finite.
  const double cap_in = p.cap * (1.0 - 1e-14);
  if (r > cap_in) r = cap_in;
  if (r < 0) r = 0;
  return r;
}

}  // namespace detail

// Moreau-Yosida proximal point: the unique minimizer of
// |M - D|^2/(2 eps) + F(M), split over the orthogonal (dev, trace) parts.
inline ProxResult prox(const DissipationPotential& f, const SymTensor2& d,
                       double eps) {
  if (!(eps > 0)) throw NumericFailure("prox requires eps > 0");
  const PotentialProfile p = flatten(f);
  const SymTensor2 dd = d.dev();
  const double rd = dd.norm();
  const double taud = d.trace();

  const double r = detail::prox_dev(p, rd, eps);
  // Trace part: minimize (tau - taud)^2/(4 eps) + (lambda/2) tau^2 s.t.
  // tau <= trace_bound ((tr M - tr D)^2 enters |M - D|^2 with weight 1/2).
  double tau = taud / (1.0 + 2.0 * eps * p.lambda);
  // Clamp strictly inside the bound (see prox_dev) so the reconstructed
  // minimizer re-evaluates as finite despite roundoff.
  const double tb_in =
      p.trace_bound - 1e-14 * std::max(1.0, std::abs(p.trace_bound));
  if (tau > tb_in) tau = tb_in;

  SymTensor2 m = (rd > 0) ? dd * (r / rd) : SymTensor2{};
  m.dxx += 0.5 * tau;
  m.dyy += 0.5 * tau;

  ProxResult out;
  out.minimizer = m;
  // Envelope and stress from the 1-d scalars, not the reconstructed tensor:
  // keeps F(m) finite at bound-active minimizers and makes the stress trace
  // exactly zero when the trace part is unconstrained with lambda = 0.
  out.envelope_value =
      ((rd - r) * (rd - r) + 0.5 * (taud - tau) * (taud - tau)) / (2.0 * eps) +
      p.dev_value(r) + p.trace_value(tau);
  out.stress = (rd > 0) ? dd * ((rd - r) / (eps * rd)) : SymTensor2{};
  const double half_st = 0.5 * (taud - tau) / eps;
  out.stress.dxx += half_st;
  out.stress.dyy += half_st;
  return out;
}

// Fenchel-Young gap F(d) + F*(s) - s:d; >= 0 up to roundoff, ~0 exactly on
// subgradient pairs.
inline double fenchel_gap(const DissipationPotential& f, const SymTensor2& d,
                          const SymTensor2& s) {
  const double fd = eval_potential(f, d);
  const double fs = conjugate(f, s);
  if (fd == kInf || fs == kInf)
    throw InfiniteOperand("fenchel_gap on infinite F(d) or F*(s)");
  return fd + fs - s.contract(d);
}

// Two-phase mixture F(chi, D) = chi F1(D) + (1 - chi) F2(D), binary chi.
struct MixturePotential {
  PotentialPtr f1;
  PotentialPtr f2;
  double comparability_k = 0;  // 0 = unset

  const DissipationPotential& select(int chi) const {
    return chi ? *f1 : *f2;
  }
};

inline double mixture_eval(const MixturePotential& m, int chi,
                           const SymTensor2& d) {
  return eval_potential(m.select(chi), d);
}

inline ProxResult mixture_prox(const MixturePotential& m, int chi,
                               const SymTensor2& d, double eps) {
  return prox(m.select(chi), d, eps);
}

struct ComparabilityReport {
  bool holds = true;
  double worst_margin = kInf;  // min slack over samples; negative = violated
  int skipped = 0;             // samples outside a domain
};

// Sampled check of (1/k) F1 - k <= F2 <= k (F1 + 1).
inline ComparabilityReport check_comparability(
    const MixturePotential& m, const std::vector<SymTensor2>& samples) {
  if (!(m.comparability_k > 0))
    throw NumericFailure("comparability constant not set");
  const double k = m.comparability_k;
  ComparabilityReport rep;
  for (const auto& d : samples) {
    const double v1 = eval_potential(*m.f1, d);
    const double v2 = eval_potential(*m.f2, d);
    if (v1 == kInf || v2 == kInf) {
      ++rep.skipped;
      continue;
    }
    const double lower = v2 - (v1 / k - k);
    const double upper = k * (v1 + 1.0) - v2;
    const double margin = std::min(lower, upper);
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < 0) rep.holds = false;
  }
  return rep;
}

}  // namespace vflow
