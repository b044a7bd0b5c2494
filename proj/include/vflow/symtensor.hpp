#pragma once

#include <cmath>

#include "vflow/common.hpp"

namespace vflow {

// Symmetric 2x2 tensor (velocity-gradient space).  Only dxx, dxy, dyy are
// stored, so asymmetry is unrepresentable by construction.
struct SymTensor2 {
  double dxx = 0, dxy = 0, dyy = 0;

  SymTensor2() = default;
  SymTensor2(double xx, double xy, double yy) : dxx(xx), dxy(xy), dyy(yy) {}

  static SymTensor2 diag(double a, double b) { return {a, 0, b}; }
  static SymTensor2 identity() { return {1, 0, 1}; }

  double trace() const { return dxx + dyy; }

  // dev(D) = D - (tr D / 2) I, written as +/- (dxx - dyy)/2 on the diagonal
  // so the result is traceless exactly, not just to roundoff.
  SymTensor2 dev() const {
    const double half_diff = 0.5 * (dxx - dyy);
    return {half_diff, dxy, -half_diff};
  }

  // Frobenius inner product; the off-diagonal entry counts twice.
  double contract(const SymTensor2& o) const {
    return dxx * o.dxx + 2.0 * dxy * o.dxy + dyy * o.dyy;
  }

  double norm2() const { return contract(*this); }
  double norm() const { return std::sqrt(norm2()); }

  SymTensor2 operator+(const SymTensor2& o) const {
    return {dxx + o.dxx, dxy + o.dxy, dyy + o.dyy};
  }
  SymTensor2 operator-(const SymTensor2& o) const {
    return {dxx - o.dxx, dxy - o.dxy, dyy - o.dyy};
  }
  SymTensor2 operator*(double s) const { return {dxx * s, dxy * s, dyy * s}; }
  SymTensor2& operator+=(const SymTensor2& o) {
    dxx += o.dxx; dxy += o.dxy; dyy += o.dyy;
    return *this;
  }
};

inline SymTensor2 operator*(double s, const SymTensor2& t) { return t * s; }

// |D|^2 = |dev D|^2 + (tr D)^2 / 2 for symmetric 2x2 tensors; the (dev,
// trace) decomposition below relies on this orthogonal split.
inline double dev_norm(const SymTensor2& d) { return d.dev().norm(); }

}  // namespace vflow
