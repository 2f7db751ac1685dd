#include <doctest.h>

#include <cmath>
#include <random>

#include "gravidec/constants.hpp"
#include "gravidec/quadrature.hpp"
#include "gravidec/response.hpp"
#include "gravidec/rng.hpp"

using namespace gravidec;
namespace k = gravidec::constants;

TEST_SUITE_BEGIN("quadrature");

TEST_CASE("Gauss-Kronrod panel constants reproduce smooth integrals") {
  // single effective panel, exp on [0, 1]
  const double v = integrate_adaptive([](double x) { return std::exp(x); }, 0.0, 1.0, 0.0);
  CHECK(v == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
  // x^20 on [0, 2]: within the Kronrod exactness degree
  const double p = integrate_adaptive([](double x) { return std::pow(x, 20); }, 0.0, 2.0, 0.0);
  CHECK(p == doctest::Approx(std::pow(2.0, 21) / 21.0).epsilon(1e-13));
  // lorentzian over a wide range vs atan
  const double l = integrate_adaptive([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, 1e6, 0.0);
  CHECK(l == doctest::Approx(std::atan(1e6)).epsilon(1e-9));
}

TEST_CASE("oscillatory integrand with capped panels") {
  // int_0^W f(w tau) / w^2 dw -> pi tau (half of the two-sided propff),
  // tail handled analytically with the f-mean 2
  const double tau = 0.73;
  const double W = 4e3 / tau;
  PanelOptions opts;
  opts.rel_tol = 1e-9;
  const double v =
      integrate_adaptive([&](double w) { return f_osc(w * tau) / (w * w); }, 0.0, W, tau, opts) +
      2.0 / W;
  CHECK(v == doctest::Approx(k::pi * tau).epsilon(1e-7));
}

TEST_CASE("integral identities for the averaging filter (random tuples)") {
  auto rng = make_engine(51, 0);
  std::uniform_real_distribution<double> ut(0.1, 3.0), ug(0.05, 2.0);
  PanelOptions opts;
  opts.rel_tol = 1e-9;
  for (int i = 0; i < 20; ++i) {
    const double tau = ut(rng), gamma = ug(rng);
    const double W = 4e3 / tau;
    // int dw/2pi f(w tau)/(w^2 + G^2) = (1 - e^{-G tau})/G
    double v = integrate_adaptive(
                   [&](double w) { return f_osc(w * tau) / (w * w + gamma * gamma); }, 0.0, W,
                   tau, opts) /
               k::pi;
    v += (2.0 / k::pi) * (0.5 * k::pi - std::atan(W / gamma)) / gamma;  // even tail, f-mean 2
    const double expect = (1.0 - std::exp(-gamma * tau)) / gamma;
    CHECK(v == doctest::Approx(expect).epsilon(1e-6));
  }
  for (int i = 0; i < 20; ++i) {
    // int dw/2pi f(w tau)/w^2 = |tau|
    const double tau = ut(rng);
    const double W = 4e3 / tau;
    double v = integrate_adaptive([&](double w) { return f_osc(w * tau) / (w * w); }, 0.0, W, tau,
                                  opts) /
                   k::pi +
               (2.0 / k::pi) / W;
    CHECK(v == doctest::Approx(tau).epsilon(1e-6));
  }
}

TEST_CASE("Min identity: int dw/4pi f(w eta) f(w tau)/w^2 = Min(|eta|, |tau|)") {
  auto rng = make_engine(52, 0);
  std::uniform_real_distribution<double> u(0.05, 4.0);
  PanelOptions opts;
  opts.rel_tol = 1e-9;
  for (int i = 0; i < 20; ++i) {
    const double eta = u(rng), tau = u(rng);
    const double tmax = eta + tau;
    const double W = 6e3 / std::min(eta, tau);
    double v = integrate_adaptive(
                   [&](double w) { return f_osc(w * eta) * f_osc(w * tau) / (w * w); }, 0.0, W,
                   tmax, opts) /
                   (2.0 * k::pi) +
               (4.0 / (2.0 * k::pi)) / W;  // f*f mean = 4
    CHECK(v == doctest::Approx(std::min(eta, tau)).epsilon(1e-6));
  }
}

TEST_CASE("non-convergence carries the partial estimate") {
  PanelOptions opts;
  opts.rel_tol = 1e-15;
  opts.max_panels = 64;
  bool threw = false;
  try {
    integrate_adaptive([](double x) { return std::sin(1.0 / (x + 1e-12)); }, 0.0, 1.0, 0.0, opts);
  } catch (const NonConvergenceError& e) {
    threw = true;
    CHECK(std::isfinite(e.partial_estimate));
    CHECK(e.achieved_abs_error > 0.0);
  }
  CHECK(threw);
}

TEST_CASE("deterministic: repeated runs produce identical bits") {
  auto f = [](double w) { return f_osc(w * 1.3) / (w * w + 0.01); };
  QuadratureDiagnostics d1, d2;
  const double a = integrate_adaptive(f, 0.0, 500.0, 1.3, {}, &d1);
  const double b = integrate_adaptive(f, 0.0, 500.0, 1.3, {}, &d2);
  CHECK(a == b);
  CHECK(d1.evaluations == d2.evaluations);
  CHECK(d1.panels == d2.panels);
}

TEST_CASE("argument validation") {
  CHECK_THROWS_AS(integrate_adaptive([](double) { return 0.0; }, 1.0, 1.0, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(integrate_adaptive([](double) { return 0.0; }, -1.0, 1.0, 0.0),
                  std::invalid_argument);
}

TEST_SUITE_END();
