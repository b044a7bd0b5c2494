#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vflow/fields.hpp"

using namespace vflow;

namespace {
constexpr double tau = 2.0 * M_PI;

ScalarField random_field(PeriodicGrid g, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> v(g.size());
  for (auto& x : v) x = u(rng);
  return {g, std::move(v)};
}
}  // namespace

TEST_CASE("transform round trip") {
  PeriodicGrid g(64);
  const ScalarField f = random_field(g, 3);
  const ScalarField back = ScalarField::from_spectrum(g, f.spectrum());
  double worst = 0;
  for (int i = 0; i < g.size(); ++i)
    worst = std::max(worst, std::abs(back.values()[i] - f.values()[i]));
  CHECK(worst <= 1e-12);
}

TEST_CASE("spectral differentiation of analytic fields") {
  PeriodicGrid g(64);
  const ScalarField f =
      ScalarField::from_function(g, [](Vec2 p) { return std::sin(tau * p.x); });
  const VectorField grad = gradient(f);
  CHECK(grad.x()(0, 0) == Catch::Approx(tau).margin(1e-10));
  CHECK(grad.y()(0, 0) == Catch::Approx(0.0).margin(1e-10));

  const VectorField shear = VectorField::from_function(
      g, [](Vec2 p) { return Vec2{std::sin(tau * p.y), 0.0}; });
  const ScalarField div = divergence(shear);
  for (double v : div.values()) CHECK(std::abs(v) <= 1e-11);

  const SymTensorField D = sym_gradient(shear);
  for (int ix = 0; ix < g.n(); ix += 7)
    for (int iy = 0; iy < g.n(); iy += 7) {
      const Vec2 p = g.node(ix, iy);
      CHECK(D.xy()(ix, iy) ==
            Catch::Approx(M_PI * std::cos(tau * p.y)).margin(1e-10));
      CHECK(std::abs(D.xx()(ix, iy)) <= 1e-11);
      CHECK(std::abs(D.yy()(ix, iy)) <= 1e-11);
    }
}

TEST_CASE("div grad equals spectral laplacian") {
  PeriodicGrid g(32);
  const ScalarField f = project_bandlimit(random_field(g, 5), g.n() / 3);
  const ScalarField lap1 = divergence(gradient(f));
  const ScalarField lap2 = [&] {
    auto hat = f.spectrum();
    for (int jx = 0; jx < g.n(); ++jx)
      for (int jy = 0; jy < g.n(); ++jy) {
        const double kx = wavenumber(jx, g.n()), ky = wavenumber(jy, g.n());
        hat[jx * g.n() + jy] *= -tau * tau * (kx * kx + ky * ky);
      }
    return ScalarField::from_spectrum(g, std::move(hat));
  }();
  for (int i = 0; i < g.size(); ++i)
    CHECK(lap1.values()[i] == Catch::Approx(lap2.values()[i]).margin(1e-9));
}

TEST_CASE("integration") {
  PeriodicGrid g(32);
  CHECK(integrate(ScalarField::from_function(
            g, [](Vec2 p) { return std::sin(tau * p.x); })) ==
        Catch::Approx(0.0).margin(1e-13));
  CHECK(integrate(ScalarField(g, 3.25)) == Catch::Approx(3.25));

  // torus has no boundary: integral of any divergence vanishes
  const VectorField v{random_field(g, 8), random_field(g, 9)};
  CHECK(integrate(divergence(v)) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("band-limit projection") {
  PeriodicGrid g(64);
  const ScalarField f = random_field(g, 10);
  const ScalarField p1 = project_bandlimit(f, 10);
  const ScalarField p2 = project_bandlimit(p1, 10);
  for (int i = 0; i < g.size(); ++i)
    CHECK(p1.values()[i] == Catch::Approx(p2.values()[i]).margin(1e-12));

  // self-adjointness in the discrete inner product
  const ScalarField a = random_field(g, 11);
  const ScalarField b = random_field(g, 12);
  CHECK(inner(project_bandlimit(a, 9), b) ==
        Catch::Approx(inner(a, project_bandlimit(b, 9))).margin(1e-12));
}

TEST_CASE("hyperviscosity multiplier") {
  PeriodicGrid g(32);
  const ScalarField mode = ScalarField::from_function(
      g, [](Vec2 p) { return std::cos(tau * p.x); });
  const ScalarField h1 = hyper_apply(mode, 1, 1.0);
  const double factor = std::pow(tau, 4);
  for (int i = 0; i < g.size(); ++i)
    CHECK(h1.values()[i] ==
          Catch::Approx(factor * mode.values()[i]).margin(1e-8 * factor));

  const VectorField zero =
      hyper_apply(VectorField{random_field(g, 13), random_field(g, 14)}, 2, 0.0);
  for (double v : zero.x().values()) CHECK(v == 0.0);

  const ScalarField diag = ScalarField::from_function(
      g, [](Vec2 p) { return std::cos(tau * (p.x + p.y)); });
  const ScalarField h2 = hyper_apply(diag, 2, 0.5);
  const double f2 = 0.5 * std::pow(tau * std::sqrt(2.0), 8);
  // oracle: apply the spectral laplacian twice and square
  CHECK(h2.values()[0] == Catch::Approx(f2 * diag.values()[0]).margin(1e-6 * f2));
}

TEST_CASE("interpolation") {
  PeriodicGrid g(64);
  const ScalarField f = random_field(g, 15);
  for (int ix = 0; ix < g.n(); ix += 13)
    for (int iy = 0; iy < g.n(); iy += 13)
      CHECK(interpolate(f, g.node(ix, iy)) == Catch::Approx(f(ix, iy)));

  const ScalarField c(g, 2.5);
  CHECK(interpolate(c, {0.123, 0.987}) == Catch::Approx(2.5));

  const VectorField sine = VectorField::from_function(
      g, [](Vec2 p) { return Vec2{std::sin(tau * p.x), 0.0}; });
  const Vec2 val = interpolate(sine, {0.25, 0.3});
  CHECK(val.x == Catch::Approx(1.0).margin(1e-4));
  CHECK(val.y == Catch::Approx(0.0).margin(1e-12));

  // periodic wrap across the seam
  const double seam = interpolate(f, {1.0 - 1e-12, 0.5});
  CHECK(seam == Catch::Approx(interpolate(f, {0.0, 0.5})).margin(1e-8));
}
