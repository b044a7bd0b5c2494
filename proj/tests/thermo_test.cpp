#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "vflow/thermo.hpp"

using namespace vflow;

TEST_CASE("pressure closed forms") {
  auto iso1 = PressureLaw::isothermal(1.0);
  CHECK(pressure(*iso1, 2.0) == Catch::Approx(2.0));
  auto iso3 = PressureLaw::isothermal(3.0);
  CHECK(pressure(*iso3, 1.0) == Catch::Approx(3.0));
  auto tab = PressureLaw::tabulated({1.0, 2.0}, {1.0, 4.0});
  CHECK(pressure(*tab, 1.0) == Catch::Approx(1.0));
  CHECK(pressure(*tab, 2.0) == Catch::Approx(4.0));
  CHECK_THROWS_AS(pressure(*tab, 3.0), OutOfRange);
}

TEST_CASE("pressure potential closed forms and normalization") {
  auto iso1 = PressureLaw::isothermal(1.0);
  CHECK(pressure_potential(*iso1, std::exp(1.0)) == Catch::Approx(std::exp(1.0)));
  CHECK(pressure_potential(*iso1, 1.0) == Catch::Approx(0.0).margin(1e-14));
  auto iso2 = PressureLaw::isothermal(2.0);
  CHECK(pressure_potential(*iso2, 1.0 / std::exp(1.0)) ==
        Catch::Approx(-2.0 / std::exp(1.0)));
  auto tab = PressureLaw::tabulated({0.1, 1.0, 10.0}, {0.1, 1.0, 10.0});
  CHECK(pressure_potential(*tab, 1.0) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("ODE identity P' rho - P = p by central differences") {
  std::vector<PressurePtr> laws = {
      PressureLaw::isothermal(1.0),
      PressureLaw::isothermal(2.5),
      PressureLaw::tabulated({0.05, 0.5, 1.0, 3.0, 12.0},
                             {0.02, 0.4, 1.0, 2.2, 5.0}),
  };
  for (const auto& law : laws) {
    for (int i = 0; i < 1000; ++i) {
      const double rho = 0.1 * std::pow(100.0, i / 999.0);  // log-spaced [0.1,10]
      // Small step: the tabulated potential is only C^1 at table nodes, so
      // the centered difference needs dr << desired residual there.
      const double dr = 3e-7 * rho;
      const double dP = (pressure_potential(*law, rho + dr) -
                         pressure_potential(*law, rho - dr)) / (2 * dr);
      const double p = pressure(*law, rho);
      const double res = dP * rho - pressure_potential(*law, rho) - p;
      CHECK(std::abs(res) <= 1e-6 * std::max(1.0, p));
    }
  }
}

TEST_CASE("convexity of P where p increases") {
  auto tab = PressureLaw::tabulated({0.1, 0.5, 1.0, 2.0, 10.0},
                                    {0.05, 0.3, 1.0, 2.5, 9.0});
  std::vector<PressurePtr> laws = {PressureLaw::isothermal(1.3), tab};
  for (const auto& law : laws) {
    for (int i = 1; i < 200; ++i) {
      const double rho = 0.2 + (9.0 - 0.2) * i / 200.0;
      const double dr = 1e-3;
      const double second = pressure_potential(*law, rho + dr) -
                            2 * pressure_potential(*law, rho) +
                            pressure_potential(*law, rho - dr);
      CHECK(second >= -1e-8);
    }
  }
}

TEST_CASE("monotone interpolation stays within neighbor values") {
  auto tab = PressureLaw::tabulated({1.0, 2.0, 3.0, 4.0},
                                    {0.0, 1.0, 1.0, 5.0});
  for (int i = 0; i <= 300; ++i) {
    const double rho = 1.0 + 3.0 * i / 300.0;
    const double p = pressure(*tab, rho);
    CHECK(p >= -1e-14);
    CHECK(p <= 5.0 + 1e-14);
    if (rho >= 2.0 && rho <= 3.0) CHECK(p == Catch::Approx(1.0).margin(1e-12));
  }
  // nondecreasing along the whole range
  double prev = -1;
  for (int i = 0; i <= 300; ++i) {
    const double p = pressure(*tab, 1.0 + 3.0 * i / 300.0);
    CHECK(p >= prev - 1e-12);
    prev = p;
  }
}

TEST_CASE("mixture pressure dispatch") {
  MixturePressure m{PressureLaw::isothermal(1.0), PressureLaw::isothermal(2.0)};
  CHECK(mixture_pressure(m, 1, 2.0) == Catch::Approx(2.0));
  CHECK(mixture_pressure(m, 0, 2.0) == Catch::Approx(4.0));
  CHECK(mixture_potential(m, 1, 1.0) == Catch::Approx(0.0).margin(1e-14));
}

TEST_CASE("construction rejects bad tables") {
  CHECK_THROWS(PressureLaw::tabulated({2.0, 1.0}, {0.0, 1.0}));
  CHECK_THROWS(PressureLaw::tabulated({1.0, 2.0}, {1.0, 0.5}));
  CHECK_THROWS(PressureLaw::isothermal(-1.0));
}
