#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "vflow/common.hpp"
#include "vflow/fft.hpp"
#include "vflow/symtensor.hpp"

namespace vflow {

// Uniform periodic grid on the flat torus [0,1)^2.
class PeriodicGrid {
 public:
  explicit PeriodicGrid(int n) : n_(n) {
    if (n < 16 || (n & (n - 1)) != 0)
      throw NumericFailure("grid size must be a power of two >= 16");
  }
  int n() const { return n_; }
  double h() const { return 1.0 / n_; }
  int size() const { return n_ * n_; }
  int index(int ix, int iy) const { return ix * n_ + iy; }
  Vec2 node(int ix, int iy) const { return {ix * h(), iy * h()}; }
  int wrap(int i) const {
    i %= n_;
    return i < 0 ? i + n_ : i;
  }
  bool operator==(const PeriodicGrid& o) const { return n_ == o.n_; }

 private:
  int n_;
};

// Nodal scalar field with a lazily cached spectral view.  Fields are
// immutable after construction; all operations return new fields.
class ScalarField {
 public:
  explicit ScalarField(PeriodicGrid g, double fill = 0.0)
      : grid_(g), v_(g.size(), fill) {}
  ScalarField(PeriodicGrid g, std::vector<double> values)
      : grid_(g), v_(std::move(values)) {
    if (static_cast<int>(v_.size()) != grid_.size())
      throw NumericFailure("nodal array size mismatch");
  }
  template <class F>
  static ScalarField from_function(PeriodicGrid g, F&& f) {
    ScalarField out(g);
    const int n = g.n();
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy)
        out.v_[g.index(ix, iy)] = f(g.node(ix, iy));
    return out;
  }
  static ScalarField from_spectrum(PeriodicGrid g, std::vector<cplx> hat) {
    fft2(hat, g.n(), true);
    ScalarField out(g);
    for (int i = 0; i < g.size(); ++i) out.v_[i] = hat[i].real();
    return out;
  }

  const PeriodicGrid& grid() const { return grid_; }
  double operator()(int ix, int iy) const { return v_[grid_.index(ix, iy)]; }
  double at_wrapped(int ix, int iy) const {
    return v_[grid_.index(grid_.wrap(ix), grid_.wrap(iy))];
  }
  const std::vector<double>& values() const { return v_; }

  const std::vector<cplx>& spectrum() const {
    if (!hat_) {
      std::vector<cplx> h(v_.begin(), v_.end());
      fft2(h, grid_.n(), false);
      hat_ = std::move(h);
    }
    return *hat_;
  }

 private:
  PeriodicGrid grid_;
  std::vector<double> v_;
  mutable std::optional<std::vector<cplx>> hat_;
};

class VectorField {
 public:
  explicit VectorField(PeriodicGrid g)
      : x_(ScalarField(g)), y_(ScalarField(g)) {}
  VectorField(ScalarField x, ScalarField y) : x_(std::move(x)), y_(std::move(y)) {
    if (!(x_.grid() == y_.grid()))
      throw NumericFailure("component grids differ");
  }
  template <class F>
  static VectorField from_function(PeriodicGrid g, F&& f) {
    std::vector<double> vx(g.size()), vy(g.size());
    for (int ix = 0; ix < g.n(); ++ix)
      for (int iy = 0; iy < g.n(); ++iy) {
        const Vec2 val = f(g.node(ix, iy));
        vx[g.index(ix, iy)] = val.x;
        vy[g.index(ix, iy)] = val.y;
      }
    return {ScalarField(g, std::move(vx)), ScalarField(g, std::move(vy))};
  }
  const PeriodicGrid& grid() const { return x_.grid(); }
  const ScalarField& x() const { return x_; }
  const ScalarField& y() const { return y_; }
  Vec2 operator()(int ix, int iy) const { return {x_(ix, iy), y_(ix, iy)}; }

 private:
  ScalarField x_, y_;
};

// Symmetric-tensor field stored as three scalar components.
class SymTensorField {
 public:
  SymTensorField(ScalarField xx, ScalarField xy, ScalarField yy)
      : xx_(std::move(xx)), xy_(std::move(xy)), yy_(std::move(yy)) {}
  const PeriodicGrid& grid() const { return xx_.grid(); }
  const ScalarField& xx() const { return xx_; }
  const ScalarField& xy() const { return xy_; }
  const ScalarField& yy() const { return yy_; }
  SymTensor2 operator()(int ix, int iy) const {
    return {xx_(ix, iy), xy_(ix, iy), yy_(ix, iy)};
  }

 private:
  ScalarField xx_, xy_, yy_;
};

namespace detail {

// Spectral derivative: multiply by 2*pi*i*k along one axis, Nyquist zeroed.
inline std::vector<cplx> spectral_derivative(const std::vector<cplx>& hat,
                                             int n, int axis) {
  std::vector<cplx> out(hat.size());
  for (int jx = 0; jx < n; ++jx) {
    const int kx = wavenumber(jx, n);
    for (int jy = 0; jy < n; ++jy) {
      const int ky = wavenumber(jy, n);
      const int k = axis == 0 ? kx : ky;
      cplx m = (std::abs(k) == n / 2) ? cplx(0, 0) : cplx(0, 2.0 * M_PI * k);
      out[jx * n + jy] = hat[jx * n + jy] * m;
    }
  }
  return out;
}

}  // namespace detail

inline ScalarField derivative(const ScalarField& f, int axis) {
  return ScalarField::from_spectrum(
      f.grid(), detail::spectral_derivative(f.spectrum(), f.grid().n(), axis));
}

inline VectorField gradient(const ScalarField& f) {
  return {derivative(f, 0), derivative(f, 1)};
}

inline ScalarField divergence(const VectorField& v) {
  const ScalarField dx = derivative(v.x(), 0);
  const ScalarField dy = derivative(v.y(), 1);
  std::vector<double> out(dx.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] += dy.values()[i];
  return ScalarField(v.grid(), std::move(out));
}

inline SymTensorField sym_gradient(const VectorField& v) {
  const ScalarField uxx = derivative(v.x(), 0);
  const ScalarField uxy = derivative(v.x(), 1);
  const ScalarField uyx = derivative(v.y(), 0);
  const ScalarField uyy = derivative(v.y(), 1);
  std::vector<double> mid(uxy.values());
  for (size_t i = 0; i < mid.size(); ++i)
    mid[i] = 0.5 * (mid[i] + uyx.values()[i]);
  return {uxx, ScalarField(v.grid(), std::move(mid)), uyy};
}

inline double integrate(const ScalarField& f) {
  double s = 0;
  for (double v : f.values()) s += v;
  return s * f.grid().h() * f.grid().h();
}

// Discrete L2 inner product h^2 * sum(f*g).
inline double inner(const ScalarField& a, const ScalarField& b) {
  double s = 0;
  for (size_t i = 0; i < a.values().size(); ++i)
    s += a.values()[i] * b.values()[i];
  return s * a.grid().h() * a.grid().h();
}

inline double inner(const VectorField& a, const VectorField& b) {
  return inner(a.x(), b.x()) + inner(a.y(), b.y());
}

inline ScalarField project_bandlimit(const ScalarField& f, int N) {
  const int n = f.grid().n();
  if (N > n / 2) throw NumericFailure("band limit exceeds n/2");
  std::vector<cplx> hat = f.spectrum();
  for (int jx = 0; jx < n; ++jx)
    for (int jy = 0; jy < n; ++jy) {
      const int kx = std::abs(wavenumber(jx, n));
      const int ky = std::abs(wavenumber(jy, n));
      if (std::max(kx, ky) > N) hat[jx * n + jy] = 0;
    }
  return ScalarField::from_spectrum(f.grid(), std::move(hat));
}

inline VectorField project_bandlimit(const VectorField& v, int N) {
  return {project_bandlimit(v.x(), N), project_bandlimit(v.y(), N)};
}

// 2/3-rule dealiasing of a nodal product.
inline ScalarField dealias(const ScalarField& f) {
  return project_bandlimit(f, f.grid().n() / 3);
}

inline ScalarField multiply(const ScalarField& a, const ScalarField& b) {
  std::vector<double> out(a.values());
  for (size_t i = 0; i < out.size(); ++i) out[i] *= b.values()[i];
  return ScalarField(a.grid(), std::move(out));
}

// Hyperviscosity pairing delta * Laplacian^m u . Laplacian^m phi is diagonal
// in the trigonometric basis; this returns the spectral multiplier image
// delta * |2 pi k|^(4m) * u_hat.
inline ScalarField hyper_apply(const ScalarField& f, int m, double delta) {
  const int n = f.grid().n();
  if (m < 1) throw NumericFailure("hyperviscosity order must be >= 1");
  std::vector<cplx> hat = f.spectrum();
  for (int jx = 0; jx < n; ++jx) {
    const int kx = wavenumber(jx, n);
    for (int jy = 0; jy < n; ++jy) {
      const int ky = wavenumber(jy, n);
      const double k2 = 4.0 * M_PI * M_PI * (double(kx) * kx + double(ky) * ky);
      hat[jx * n + jy] *= delta * std::pow(k2, 2 * m);
    }
  }
  return ScalarField::from_spectrum(f.grid(), std::move(hat));
}

inline VectorField hyper_apply(const VectorField& v, int m, double delta) {
  return {hyper_apply(v.x(), m, delta), hyper_apply(v.y(), m, delta)};
}

// int |Laplacian^m u|^2 via Parseval.
inline double hyper_energy(const VectorField& v, int m) {
  const int n = v.grid().n();
  const auto& hx = v.x().spectrum();
  const auto& hy = v.y().spectrum();
  double s = 0;
  for (int jx = 0; jx < n; ++jx) {
    const int kx = wavenumber(jx, n);
    for (int jy = 0; jy < n; ++jy) {
      const int ky = wavenumber(jy, n);
      const double k2 = 4.0 * M_PI * M_PI * (double(kx) * kx + double(ky) * ky);
      const double w = std::pow(k2, 2 * m);
      s += w * (std::norm(hx[jx * n + jy]) + std::norm(hy[jx * n + jy]));
    }
  }
  return s;
}

namespace detail {

// Catmull-Rom weights; exact for cubic polynomials and for nodal hits.
inline void catmull_rom(double t, double w[4]) {
  const double t2 = t * t, t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2 * t2 - t);
  w[1] = 0.5 * (3 * t3 - 5 * t2 + 2);
  w[2] = 0.5 * (-3 * t3 + 4 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

}  // namespace detail

struct InterpSample {
  double value = 0;
  double stencil_min = 0;  // min over the 16-node stencil, undershoot guard
};

inline InterpSample interpolate_guarded(const ScalarField& f, Vec2 p) {
  const int n = f.grid().n();
  const double gx = wrap01(p.x) * n, gy = wrap01(p.y) * n;
  const int ix = static_cast<int>(std::floor(gx));
  const int iy = static_cast<int>(std::floor(gy));
  double wx[4], wy[4];
  detail::catmull_rom(gx - ix, wx);
  detail::catmull_rom(gy - iy, wy);
  double acc = 0, mn = kInf;
  for (int a = -1; a <= 2; ++a) {
    const int jx = f.grid().wrap(ix + a);
    double row = 0;
    for (int b = -1; b <= 2; ++b) {
      const double val = f(jx, f.grid().wrap(iy + b));
      row += wy[b + 1] * val;
      mn = std::min(mn, val);
    }
    acc += wx[a + 1] * row;
  }
  return {acc, mn};
}

inline double interpolate(const ScalarField& f, Vec2 p) {
  return interpolate_guarded(f, p).value;
}

inline Vec2 interpolate(const VectorField& v, Vec2 p) {
  return {interpolate(v.x(), p), interpolate(v.y(), p)};
}

}  // namespace vflow
