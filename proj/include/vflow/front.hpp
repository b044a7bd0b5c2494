#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "vflow/flowmap.hpp"

namespace vflow {

// Front-tracked interface: a closed counterclockwise marker polyline around
// the first phase, its rasterized indicator, and the curve-carried discrete
// varifold (one atom per segment: midpoint, outward normal, length weight).
//
// Marker coordinates are lifted: consecutive points stay continuous even
// when the curve crosses the torus seam, so lengths and normals never jump.

struct MarkerCurve {
  std::vector<Vec2> points;  // closed polyline, lifted coordinates
  double target_spacing = 0;

  static MarkerCurve circle(Vec2 center, double radius, int markers,
                            double spacing) {
    MarkerCurve c;
    c.target_spacing = spacing;
    c.points.reserve(markers);
    for (int i = 0; i < markers; ++i) {
      const double a = 2.0 * M_PI * i / markers;
      c.points.push_back(
          {center.x + radius * std::cos(a), center.y + radius * std::sin(a)});
    }
    return c;
  }
};

inline double signed_area(const MarkerCurve& c) {
  double twice = 0;
  const size_t m = c.points.size();
  for (size_t i = 0; i < m; ++i) {
    const Vec2 a = c.points[i], b = c.points[(i + 1) % m];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

inline double perimeter(const MarkerCurve& c) {
  double len = 0;
  const size_t m = c.points.size();
  for (size_t i = 0; i < m; ++i)
    len += (c.points[(i + 1) % m] - c.points[i]).norm();
  return len;
}

namespace detail {

// Proper crossing test for closed segments ab and cd.
inline bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  auto orient = [](Vec2 p, Vec2 q, Vec2 r) {
    const double v = (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    return (v > 0) - (v < 0);
  };
  const int o1 = orient(a, b, c), o2 = orient(a, b, d);
  const int o3 = orient(c, d, a), o4 = orient(c, d, b);
  return o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0;
}

inline bool curve_simple(const MarkerCurve& c) {
  const size_t m = c.points.size();
  for (size_t i = 0; i < m; ++i) {
    const Vec2 a = c.points[i], b = c.points[(i + 1) % m];
    for (size_t j = i + 2; j < m; ++j) {
      if (i == 0 && j + 1 == m) continue;  // adjacent through the seam
      if (segments_cross(a, b, c.points[j], c.points[(j + 1) % m]))
        return false;
    }
  }
  return true;
}

// Relift: first point into [0,1)^2, each successive point at the image
// nearest its predecessor.  Keeps lifted coordinates from drifting.
inline void relift(MarkerCurve& c) {
  if (c.points.empty()) return;
  Vec2 prev = wrap01(c.points[0]);
  c.points[0] = prev;
  for (size_t i = 1; i < c.points.size(); ++i) {
    Vec2 p = c.points[i];
    p.x -= std::round(p.x - prev.x);
    p.y -= std::round(p.y - prev.y);
    c.points[i] = p;
    prev = p;
  }
}

// Closed Catmull-Rom evaluation through the markers at parameter
// (i + t) in segment i.
inline Vec2 spline_point(const std::vector<Vec2>& pts, size_t i, double t) {
  const size_t m = pts.size();
  const Vec2 p0 = pts[(i + m - 1) % m], p1 = pts[i], p2 = pts[(i + 1) % m],
             p3 = pts[(i + 2) % m];
  double w[4];
  catmull_rom(t, w);
  return {w[0] * p0.x + w[1] * p1.x + w[2] * p2.x + w[3] * p3.x,
          w[0] * p0.y + w[1] * p1.y + w[2] * p2.y + w[3] * p3.y};
}

}  // namespace detail

// Arclength resampling by a closed cubic spline through the markers.  The
// marker count is chosen so adjacent spacing lands on target_spacing.
inline MarkerCurve resample(const MarkerCurve& c) {
  const size_t m = c.points.size();
  if (m < 3 || !(c.target_spacing > 0))
    throw NumericFailure("resample needs >= 3 markers and a spacing target");
  // Cumulative arclength of the spline, sampled densely per segment.
  const int sub = 8;
  std::vector<double> cum(m * sub + 1, 0.0);
  std::vector<Vec2> samples(m * sub + 1);
  samples[0] = c.points[0];
  for (size_t i = 0; i < m; ++i)
    for (int s = 1; s <= sub; ++s) {
      const size_t k = i * sub + s;
      samples[k] = detail::spline_point(c.points, i, static_cast<double>(s) / sub);
      cum[k] = cum[k - 1] + (samples[k] - samples[k - 1]).norm();
    }
  const double total = cum.back();
  size_t count = static_cast<size_t>(std::lround(total / c.target_spacing));
  if (count < 16) count = 16;

  MarkerCurve out;
  out.target_spacing = c.target_spacing;
  out.points.reserve(count);
  size_t k = 0;
  for (size_t j = 0; j < count; ++j) {
    const double s = total * j / count;
    while (k + 1 < cum.size() && cum[k + 1] < s) ++k;
    const double seg = cum[k + 1] - cum[k];
    const double t = seg > 0 ? (s - cum[k]) / seg : 0.0;
    out.points.push_back(samples[k] + (samples[k + 1] - samples[k]) * t);
  }
  detail::relift(out);
  return out;
}

// Forward RK4 advection of every marker, then arclength resampling.  A
// self-intersecting result signals a topology change and halts the run.
inline MarkerCurve advect_markers(const MarkerCurve& c,
                                  const VelocitySegment& seg,
                                  const CharacteristicConfig& cfg,
                                  int step = 0) {
  MarkerCurve moved = c;
  const double span = seg.t1 - seg.t0;
  const double tau = span / cfg.substeps;
  for (Vec2& x : moved.points) {
    for (int s = 0; s < cfg.substeps; ++s) {
      const double th0 = static_cast<double>(s) / cfg.substeps;
      const double thm = th0 + 0.5 / cfg.substeps;
      const double th1 = th0 + 1.0 / cfg.substeps;
      const Vec2 k1 = seg.velocity(x, th0);
      const Vec2 k2 = seg.velocity(x + k1 * (0.5 * tau), thm);
      const Vec2 k3 = seg.velocity(x + k2 * (0.5 * tau), thm);
      const Vec2 k4 = seg.velocity(x + k3 * tau, th1);
      const Vec2 d = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (tau / 6.0);
      if (cfg.max_displacement > 0 && d.norm() > cfg.max_displacement)
        throw CflViolation("marker substep displacement exceeds guard");
      x += d;
    }
  }
  MarkerCurve out = resample(moved);
  if (signed_area(out) <= 0)
    throw SelfIntersection(step);  // orientation lost: curve degenerate
  if (!detail::curve_simple(out)) throw SelfIntersection(step);
  return out;
}

// Nodal indicator of the region enclosed by the curve, even-odd rule.  The
// lifted polygon is closed in the plane, so a node is inside iff one of its
// integer translates within the polygon's bounding box is inside.
inline ScalarField rasterize_chi(const MarkerCurve& c, const PeriodicGrid& g) {
  const size_t m = c.points.size();
  double xlo = kInf, xhi = -kInf, ylo = kInf, yhi = -kInf;
  for (const Vec2& p : c.points) {
    xlo = std::min(xlo, p.x);
    xhi = std::max(xhi, p.x);
    ylo = std::min(ylo, p.y);
    yhi = std::max(yhi, p.y);
  }
  auto inside = [&](Vec2 q) {
    bool in = false;
    for (size_t i = 0; i < m; ++i) {
      const Vec2 a = c.points[i], b = c.points[(i + 1) % m];
      if ((a.y > q.y) != (b.y > q.y)) {
        const double xc = a.x + (q.y - a.y) / (b.y - a.y) * (b.x - a.x);
        if (q.x < xc) in = !in;
      }
    }
    return in;
  };
  std::vector<double> out(g.size(), 0.0);
  parallel_for(0, g.size(), [&](int idx) {
    const Vec2 p = g.node(idx / g.n(), idx % g.n());
    for (int sx = static_cast<int>(std::floor(xlo - p.x));
         p.x + sx <= xhi && out[idx] == 0.0; ++sx)
      for (int sy = static_cast<int>(std::floor(ylo - p.y)); p.y + sy <= yhi;
           ++sy)
        if (inside({p.x + sx, p.y + sy})) {
          out[idx] = 1.0;
          break;
        }
  });
  return ScalarField(g, std::move(out));
}

struct VarifoldAtom {
  Vec2 x;   // segment midpoint, wrapped into [0,1)^2
  Vec2 z;   // outward unit normal of the first phase
  double w = 0;  // segment length
};

struct DiscreteVarifold {
  std::vector<VarifoldAtom> atoms;

  double total_weight() const {
    double s = 0;
    for (const auto& a : atoms) s += a.w;
    return s;
  }
};

inline DiscreteVarifold varifold_from_curve(const MarkerCurve& c) {
  DiscreteVarifold v;
  const size_t m = c.points.size();
  v.atoms.reserve(m);
  for (size_t i = 0; i < m; ++i) {
    const Vec2 a = c.points[i], b = c.points[(i + 1) % m];
    const Vec2 t = b - a;
    const double len = t.norm();
    if (len == 0) continue;
    // Counterclockwise orientation: (t_y, -t_x) points out of the region.
    v.atoms.push_back({wrap01(Vec2{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}),
                       {t.y / len, -t.x / len},
                       len});
  }
  return v;
}

// First variation: sum_j w_j (I - z_j z_j^T) : grad phi(x_j).
inline double first_variation(const DiscreteVarifold& v,
                              const std::function<Mat2(Vec2)>& grad_phi) {
  double s = 0;
  for (const auto& a : v.atoms) {
    const Mat2 gp = grad_phi(a.x);
    const double zz = a.z.x * (gp.a11 * a.z.x + gp.a12 * a.z.y) +
                      a.z.y * (gp.a21 * a.z.x + gp.a22 * a.z.y);
    s += a.w * (gp.a11 + gp.a22 - zz);
  }
  return s;
}

// Compatibility of the varifold with the indicator's gradient measure:
// int phi . z dV + int phi . d grad chi.  The distributional grad chi is the
// line measure -z (length) along the curve, recomputed here from the curve
// itself so the two sums are independent.
inline double compatibility_residual(const DiscreteVarifold& v,
                                     const MarkerCurve& c,
                                     const std::function<Vec2(Vec2)>& phi) {
  double atom_sum = 0;
  for (const auto& a : v.atoms) atom_sum += a.w * phi(a.x).dot(a.z);
  double curve_sum = 0;
  const size_t m = c.points.size();
  for (size_t i = 0; i < m; ++i) {
    const Vec2 a = c.points[i], b = c.points[(i + 1) % m];
    const Vec2 t = b - a;
    const double len = t.norm();
    if (len == 0) continue;
    const Vec2 mid = wrap01(Vec2{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)});
    const Vec2 grad_chi{-t.y / len, t.x / len};  // -z: gradient points inward
    curve_sum += len * phi(mid).dot(grad_chi);
  }
  return atom_sum + curve_sum;
}

}  // namespace vflow
