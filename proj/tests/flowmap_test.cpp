#include <catch2/catch_amalgamated.hpp>
#include <cmath>

#include "vflow/flowmap.hpp"

using namespace vflow;

namespace {

constexpr double pi = 3.14159265358979323846;

VectorField shear_field(PeriodicGrid g) {
  return VectorField::from_function(
      g, [](Vec2 p) { return Vec2{std::sin(2 * pi * p.y), 0.0}; });
}

// Exact characteristic of xdot = a sin(2 pi x): tan(pi x) evolves by the
// factor e^{2 pi a t}; likewise int div along the path has the closed form
// ln(sin(2 pi x(t1)) / sin(2 pi x(t0))).
double exact_backward_x(double x1, double a, double dt) {
  return std::atan(std::tan(pi * x1) * std::exp(-2 * pi * a * dt)) / pi;
}

}  // namespace

TEST_CASE("backward foot: identity, translation, shear") {
  PeriodicGrid g(32);
  const auto cfg = CharacteristicConfig::for_grid(g, 8);

  auto zero = VelocitySegment::steady(VectorField(g), 0.0, 0.25);
  CHECK(backward_foot(zero, {0.3, 0.7}, cfg).x == Catch::Approx(0.3));
  CHECK(backward_foot(zero, {0.3, 0.7}, cfg).y == Catch::Approx(0.7));

  auto uconst = VectorField::from_function(
      g, [](Vec2) { return Vec2{0.125, -0.0625}; });
  auto trans = VelocitySegment::steady(uconst, 0.0, 0.1);
  const Vec2 f = backward_foot(trans, {0.0625, 0.03125}, cfg);
  CHECK(f.x == Catch::Approx(0.05).margin(1e-12));
  CHECK(f.y == Catch::Approx(wrap01(0.03125 + 0.00625)).margin(1e-12));

  // Shear characteristics are straight since u depends only on y.
  auto sh = VelocitySegment::steady(shear_field(g), 0.0, 0.1);
  const Vec2 fs = backward_foot(sh, {0.5, 0.25}, cfg);
  CHECK(fs.x == Catch::Approx(0.4).margin(1e-9));
  CHECK(fs.y == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("cfl guard trips on large displacement") {
  PeriodicGrid g(32);
  auto fast =
      VectorField::from_function(g, [](Vec2) { return Vec2{5.0, 0.0}; });
  auto seg = VelocitySegment::steady(fast, 0.0, 0.1);
  CHECK_THROWS_AS(backward_foot(seg, {0.5, 0.5}, {1, 0.5 * g.h()}),
                  CflViolation);
  auto rho = ScalarField(g, 1.0);
  CHECK_THROWS_AS(transport_density(rho, seg, {1, 0.5 * g.h()}), CflViolation);
  // Enough substeps clears the guard.
  CHECK_NOTHROW(backward_foot(seg, {0.5, 0.5}, {64, 0.5 * g.h()}));
}

TEST_CASE("rk4 composition is third order locally") {
  PeriodicGrid g(32);
  auto u = VectorField::from_function(g, [](Vec2 p) {
    return Vec2{std::sin(2 * pi * p.y) + 0.3 * std::cos(2 * pi * p.x),
                std::cos(2 * pi * p.x)};
  });
  const Vec2 x{0.37, 0.61};
  auto foot_with_dt = [&](double dt, int sub) {
    return backward_foot(VelocitySegment::steady(u, 0.0, dt), x,
                         {sub, 1.0});
  };
  // Reference with many substeps, then one vs two substeps of dt.
  const Vec2 ref = foot_with_dt(0.08, 256);
  const Vec2 one = foot_with_dt(0.08, 1);
  const Vec2 two = foot_with_dt(0.08, 2);
  const double e1 = std::hypot(one.x - ref.x, one.y - ref.y);
  const double e2 = std::hypot(two.x - ref.x, two.y - ref.y);
  CHECK(e1 > 1e-12);
  CHECK(e1 / e2 > 8.0);  // RK4: local halving gains >= 2^3 (order >= 3)
}

TEST_CASE("transport density: identity, translation, analytic divergence") {
  PeriodicGrid g(64);
  const auto cfg = CharacteristicConfig::for_grid(g, 8);
  auto rho0 = ScalarField::from_function(g, [](Vec2 p) {
    return 2.0 + std::sin(2 * pi * p.x) * std::cos(2 * pi * p.y);
  });

  auto zero = VelocitySegment::steady(VectorField(g), 0.0, 0.05);
  auto same = transport_density(rho0, zero, cfg);
  for (int i = 0; i < g.size(); ++i)
    REQUIRE(same.values()[i] == Catch::Approx(rho0.values()[i]).margin(1e-13));

  auto uc = VectorField::from_function(g, [](Vec2) { return Vec2{0.3, 0.2}; });
  auto trans = VelocitySegment::steady(uc, 0.0, 0.05);
  auto shifted = transport_density(rho0, trans, cfg);
  double err = 0;
  for (int ix = 0; ix < g.n(); ++ix)
    for (int iy = 0; iy < g.n(); ++iy) {
      const Vec2 p = g.node(ix, iy);
      const double exact = 2.0 + std::sin(2 * pi * (p.x - 0.015)) *
                                     std::cos(2 * pi * (p.y - 0.01));
      err = std::max(err, std::abs(shifted(ix, iy) - exact));
    }
  CHECK(err < 1e-4);  // bicubic interpolation error only

  // Compressive 1-d field: exact solution via the characteristic closed form.
  const double a = 0.2, dt = 0.1;
  auto ucomp = VectorField::from_function(
      g, [a](Vec2 p) { return Vec2{a * std::sin(2 * pi * p.x), 0.0}; });
  auto comp = VelocitySegment::steady(ucomp, 0.0, dt);
  auto rho1 = transport_density(ScalarField(g, 1.0), comp, cfg);
  for (double x1 : {0.25, 0.375, 0.625}) {
    const double x0 = exact_backward_x(x1, a, dt);
    // rho = exp(-int div) with int div = ln(sin(2 pi x1)/sin(2 pi x0))
    const double exact = std::sin(2 * pi * x0) / std::sin(2 * pi * x1);
    const int ix = static_cast<int>(std::lround(x1 * g.n()));
    CHECK(rho1(ix, 5) == Catch::Approx(exact).margin(2e-5));
  }
}

TEST_CASE("density bounds under divergence") {
  PeriodicGrid g(64);
  const auto cfg = CharacteristicConfig::for_grid(g, 8);
  auto u = VectorField::from_function(g, [](Vec2 p) {
    return Vec2{0.3 * std::sin(2 * pi * p.x), 0.3 * std::cos(2 * pi * p.y)};
  });
  auto rho = ScalarField::from_function(
      g, [](Vec2 p) { return 1.0 + 0.5 * std::sin(2 * pi * p.x); });
  const double rho_lo = 0.5, rho_hi = 1.5;
  double dbar = 0;
  auto seg = VelocitySegment::steady(u, 0.0, 0.01);
  for (double v : seg.div0.values()) dbar = std::max(dbar, std::abs(v));
  double t = 0;
  for (int s = 0; s < 20; ++s) {
    rho = transport_density(rho, VelocitySegment::steady(u, t, t + 0.01), cfg);
    t += 0.01;
    double lo = kInf, hi = -kInf;
    for (double v : rho.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    REQUIRE(lo >= rho_lo * std::exp(-t * dbar) - 1e-8);
    REQUIRE(hi <= rho_hi * std::exp(t * dbar) + 1e-8);
  }
}

TEST_CASE("indicator transport stays exactly in {0,1}") {
  PeriodicGrid g(32);
  const auto cfg = CharacteristicConfig::for_grid(g, 8);
  auto chi = ScalarField::from_function(g, [&](Vec2 p) {
    return (static_cast<int>(p.x * 32) + static_cast<int>(p.y * 32)) % 2 ? 1.0
                                                                         : 0.0;
  });

  auto zero = VelocitySegment::steady(VectorField(g), 0.0, 0.05);
  auto same = transport_indicator_grid(chi, zero, cfg);
  CHECK(same.values() == chi.values());

  // Translation by exactly 3 cells in x over the step.
  const double dt = 0.05, U = 3.0 * g.h() / dt;
  auto uc = VectorField::from_function(g, [U](Vec2) { return Vec2{U, 0.0}; });
  auto shifted = transport_indicator_grid(
      chi, VelocitySegment::steady(uc, 0.0, dt), {16, 0.5 * g.h()});
  for (int ix = 0; ix < g.n(); ++ix)
    for (int iy = 0; iy < g.n(); ++iy)
      REQUIRE(shifted(ix, iy) == chi(g.wrap(ix - 3), iy));

  auto sheared = transport_indicator_grid(
      chi, VelocitySegment::steady(shear_field(g), 0.0, 0.01), cfg);
  for (double v : sheared.values()) REQUIRE((v == 0.0 || v == 1.0));
}

namespace {

TrajectorySegment advance(const VectorField& u, const ScalarField& rho,
                          const ScalarField& chi, double t, double dt,
                          const CharacteristicConfig& cfg) {
  VelocitySegment seg = VelocitySegment::steady(u, t, t + dt);
  ScalarField rho1 = transport_density(rho, seg, cfg);
  ScalarField chi1 = transport_indicator_grid(chi, seg, cfg);
  return {std::move(seg), rho, std::move(rho1), chi, std::move(chi1)};
}

double run_residual(int n, double dt, const std::function<double(double, double)>& b,
                    const std::function<double(double, double)>& db,
                    const SpaceTimePhi& phi) {
  PeriodicGrid g(n);
  const auto cfg = CharacteristicConfig::for_grid(g, 4);
  auto u = VectorField::from_function(g, [](Vec2 p) {
    return Vec2{0.2 * std::sin(2 * pi * p.x) * std::cos(2 * pi * p.y),
                0.15 * std::cos(2 * pi * p.x)};
  });
  auto rho = ScalarField::from_function(g, [](Vec2 p) {
    return 1.5 + 0.4 * std::cos(2 * pi * p.x) * std::sin(2 * pi * p.y);
  });
  auto chi = ScalarField::from_function(
      g, [](Vec2 p) { return p.y < 0.5 ? 1.0 : 0.0; });
  double total = 0, t = 0;
  const int steps = static_cast<int>(std::lround(0.1 / dt));
  for (int s = 0; s < steps; ++s) {
    auto traj = advance(u, rho, chi, t, dt, cfg);
    total += renormalized_residual(traj, b, db, phi);
    rho = traj.rho1;
    chi = traj.chi1;
    t += dt;
  }
  return total;
}

}  // namespace

TEST_CASE("renormalized residual: mass and indicator with phi = 1") {
  auto one = SpaceTimePhi::constant(1.0);
  // b = rho reduces to mass conservation.
  auto b_rho = [](double, double r) { return r; };
  auto db_rho = [](double, double) { return 1.0; };
  CHECK(std::abs(run_residual(64, 0.01, b_rho, db_rho, one)) < 5e-6);
  // b = chi has no rho dependence.
  auto b_chi = [](double c, double) { return c; };
  auto db_chi = [](double, double) { return 0.0; };
  CHECK(std::abs(run_residual(64, 0.01, b_chi, db_chi, one)) < 5e-3);
}

TEST_CASE("renormalized residual decays at 2nd order") {
  // b = rho ln rho (the isothermal pressure potential): the residual of the
  // internal-energy identity shrinks by >= ~3x when h and dt are halved.
  auto b = [](double, double r) { return r * std::log(r); };
  auto db = [](double, double r) { return std::log(r) + 1.0; };
  SpaceTimePhi phi{
      [](Vec2 p, double t) {
        return std::cos(2 * pi * p.x) * std::cos(2 * pi * t);
      },
      [](Vec2 p, double t) {
        return -2 * pi * std::cos(2 * pi * p.x) * std::sin(2 * pi * t);
      },
      [](Vec2 p, double t) {
        return Vec2{-2 * pi * std::sin(2 * pi * p.x) * std::cos(2 * pi * t),
                    0.0};
      }};
  const double coarse = std::abs(run_residual(32, 0.02, b, db, phi));
  const double fine = std::abs(run_residual(64, 0.01, b, db, phi));
  CHECK(coarse > 1e-12);
  CHECK(coarse / fine > 3.0);
}

TEST_CASE("mass drift shrinks at >= 2nd order") {
  auto drift = [&](int n, double dt) {
    PeriodicGrid g(n);
    const auto cfg = CharacteristicConfig::for_grid(g, 4);
    auto u = VectorField::from_function(g, [](Vec2 p) {
      return Vec2{0.2 * std::sin(2 * pi * p.x) * std::cos(2 * pi * p.y),
                  0.15 * std::cos(2 * pi * p.x)};
    });
    auto rho = ScalarField::from_function(g, [](Vec2 p) {
      return 1.5 + 0.4 * std::cos(2 * pi * p.x) * std::sin(2 * pi * p.y);
    });
    const double m0 = integrate(rho);
    double t = 0;
    const int steps = static_cast<int>(std::lround(0.1 / dt));
    for (int s = 0; s < steps; ++s) {
      rho = transport_density(rho, VelocitySegment::steady(u, t, t + dt), cfg);
      t += dt;
    }
    return std::abs(integrate(rho) - m0);
  };
  const double coarse = drift(32, 0.02);
  const double fine = drift(64, 0.01);
  CHECK(coarse > 1e-13);
  CHECK(coarse / fine > 3.5);
}
