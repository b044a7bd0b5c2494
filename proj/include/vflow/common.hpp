#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace vflow {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_finite(double x) { return std::isfinite(x); }

// Error types shared across modules.  Each one signals a condition the
// caller is expected to handle (abort the step, reject the input, ...).

struct NumericFailure : std::runtime_error {
  explicit NumericFailure(const std::string& what) : std::runtime_error(what) {}
};

struct NonConvergence : std::runtime_error {
  int iterations;
  explicit NonConvergence(int iters)
      : std::runtime_error("iteration cap exceeded after " +
                           std::to_string(iters) + " iterations"),
        iterations(iters) {}
};

struct InfiniteOperand : std::runtime_error {
  explicit InfiniteOperand(const std::string& what) : std::runtime_error(what) {}
};

struct CflViolation : std::runtime_error {
  explicit CflViolation(const std::string& what) : std::runtime_error(what) {}
};

struct SelfIntersection : std::runtime_error {
  int step;
  explicit SelfIntersection(int at_step)
      : std::runtime_error("marker curve self-intersects at step " +
                           std::to_string(at_step)),
        step(at_step) {}
};

struct IterationLimit : std::runtime_error {
  explicit IterationLimit(const std::string& what) : std::runtime_error(what) {}
};

struct OutOfRange : std::runtime_error {
  explicit OutOfRange(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
  int line;
  ParseError(int at_line, const std::string& message)
      : std::runtime_error("line " + std::to_string(at_line) + ": " + message),
        line(at_line) {}
};

struct MalformedTrajectory : std::runtime_error {
  explicit MalformedTrajectory(const std::string& what)
      : std::runtime_error(what) {}
};

struct InadmissibleTest : std::runtime_error {
  explicit InadmissibleTest(const std::string& what)
      : std::runtime_error(what) {}
};

// 2-vector on the torus (or a lifted copy of it).
struct Vec2 {
  double x = 0, y = 0;
  Vec2() = default;
  Vec2(double xx, double yy) : x(xx), y(yy) {}
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, Vec2 v) { return v * s; }

// Full (not necessarily symmetric) 2x2 matrix, used for gradients of
// vector fields evaluated at points.
struct Mat2 {
  double a11 = 0, a12 = 0, a21 = 0, a22 = 0;
  static Mat2 identity() { return {1, 0, 0, 1}; }
  Mat2 operator+(const Mat2& o) const {
    return {a11 + o.a11, a12 + o.a12, a21 + o.a21, a22 + o.a22};
  }
  Mat2 operator*(double s) const { return {a11 * s, a12 * s, a21 * s, a22 * s}; }
  double contract(const Mat2& o) const {
    return a11 * o.a11 + a12 * o.a12 + a21 * o.a21 + a22 * o.a22;
  }
};

inline double wrap01(double x) {
  double r = x - std::floor(x);
  return (r >= 1.0) ? 0.0 : r;
}

inline Vec2 wrap01(Vec2 p) { return {wrap01(p.x), wrap01(p.y)}; }

// Thread cap for data-parallel nodal loops; VFLOW_THREADS overrides.
inline unsigned max_threads() {
  static unsigned cached = [] {
    if (const char* env = std::getenv("VFLOW_THREADS")) {
      long v = std::atol(env);
      if (v >= 1) return static_cast<unsigned>(v);
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1u;
  }();
  return cached;
}

// Chunked parallel loop with disjoint writes only; results are identical
// to the sequential loop regardless of the thread count.
template <class F>
void parallel_for(int begin, int end, F&& body) {
  const int count = end - begin;
  unsigned nthreads = max_threads();
  if (nthreads <= 1 || count < 256) {
    for (int i = begin; i < end; ++i) body(i);
    return;
  }
  if (nthreads > static_cast<unsigned>(count)) nthreads = count;
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  const int chunk = (count + nthreads - 1) / nthreads;
  for (unsigned t = 0; t < nthreads; ++t) {
    const int lo = begin + static_cast<int>(t) * chunk;
    const int hi = std::min(end, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &body] {
      for (int i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace vflow
