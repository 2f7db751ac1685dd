#include <doctest.h>

#include <cmath>
#include <random>

#include "gravidec/decoherence.hpp"
#include "gravidec/presets.hpp"
#include "gravidec/rng.hpp"

using namespace gravidec;
namespace k = gravidec::constants;

TEST_SUITE_BEGIN("decoherence");

TEST_CASE("visibility: values, domain, monotonicity") {
  CHECK(visibility(0.0) == 1.0);
  CHECK(visibility(2.0 * std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(1.0 - visibility(2e-12) == doctest::Approx(1e-12).epsilon(1e-3));
  CHECK_THROWS_AS(visibility(-1e-9), std::domain_error);
  double prev = 2.0;
  for (double v = 0.0; v < 5.0; v += 0.25) {
    const double vis = visibility(v);
    CHECK(vis > 0.0);
    CHECK(vis <= 1.0);
    CHECK(vis < prev);
    prev = vis;
  }
}

TEST_CASE("variance integral: flat spectrum against the filter identity") {
  // A = f(w tau)/w^2 with flat S_h over a wide band: DPhi^2/S_h = (1-e^{-G tau})/G
  const double tau = 1.0;
  auto rsp = ApparatusResponse::custom(
      [tau](double w) { return w == 0.0 ? tau * tau : f_osc(w * tau) / (w * w); }, tau, tau, 2.0);
  auto bg = GwBackground::flat(1.0, {1e-9, 1e8});
  IntegrationOptions opts;
  opts.rel_tol = 1e-8;
  {
    auto r = variance_integral(bg, rsp, LorentzianHighPass(1.0), opts);
    CHECK(r.variance == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-5));
    CHECK(r.variance == doctest::Approx(0.6321).epsilon(1e-3));
    CHECK(r.visibility == std::exp(-0.5 * r.variance));
    CHECK(r.diagnostics.evaluations > 0);
  }
  {
    // Gamma -> 0 recovers DPhi^2 -> S_h |tau|
    auto r = variance_integral(bg, rsp, LorentzianHighPass(1e-6), opts);
    CHECK(r.variance == doctest::Approx(tau).epsilon(1e-5));
  }
  {
    // zero spectrum: variance 0, visibility 1
    auto zero = GwBackground::flat(0.0, {1e-9, 1e8});
    auto r = variance_integral(zero, rsp, LorentzianHighPass(1.0), opts);
    CHECK(r.variance == 0.0);
    CHECK(r.visibility == 1.0);
  }
}

TEST_CASE("flat atomic variance: closed form, limits, hyper numbers") {
  const RhombGeometry g = presets::hyper_cs_rhomb();
  const double s_h = 1e-34;
  // independent arithmetic chain for the small-Gamma limit
  const double om = 2e-25 * 0.2 * 0.2 / (2.0 * k::hbar);
  const double expect_half = 4.0 * om * om * 0.035 * 0.035 * s_h * 1.5;
  CHECK(0.5 * flat_atomic_variance_small_gamma(g, s_h) ==
        doctest::Approx(expect_half).epsilon(1e-12));
  CHECK(0.5 * flat_atomic_variance_small_gamma(g, s_h) ==
        doctest::Approx(1.057438212e-21).epsilon(1e-9));
  // exact Gamma form approaches the limit within 1% for Gamma tau < 1e-3
  const double gamma_small = 1e-3 / g.tau_ab();
  CHECK(flat_atomic_variance(g, s_h, gamma_small) ==
        doctest::Approx(flat_atomic_variance_small_gamma(g, s_h)).epsilon(0.01));
  CHECK(flat_atomic_variance(g, 0.0, 1.0) == 0.0);
  CHECK_THROWS_AS(flat_atomic_variance(g, s_h, 0.0), std::invalid_argument);
  // large Gamma tau: bracket -> 3; cross-check against the numerical integral
  const double gamma_big = 50.0 / g.tau_ab();
  const double e1 = std::exp(-gamma_big * g.tau_ab());
  const double bracket = 3.0 - 4.0 * e1 + e1 * e1;
  CHECK(bracket == doctest::Approx(3.0).epsilon(1e-12));
  auto bg = GwBackground::flat(s_h, {1e-10, 1e8});
  IntegrationOptions opts;
  opts.rel_tol = 1e-8;
  auto r = variance_integral(bg, ApparatusResponse::atomic(g), LorentzianHighPass(gamma_big), opts);
  CHECK(r.variance == doctest::Approx(flat_atomic_variance(g, s_h, gamma_big)).epsilon(1e-4));
}

TEST_CASE("exposure kernel: zeros, saturation, colinear limit") {
  const RamanOptics o = presets::hyper_cs_optics();
  CHECK(exposure_kernel(0.0, o, 1.0) == 0.0);
  // |eta| >> photonic times at beta+ = beta- = 1: exact equals the limit form
  const double eta = 1e3 * o.tau_mb();
  CHECK(exposure_kernel(eta, o, k::pi / 2) ==
        doctest::Approx(exposure_kernel_limit(o, k::pi / 2)).epsilon(1e-12));
  CHECK(exposure_kernel_limit(o, k::pi / 2) == doctest::Approx(2.0 * o.tau_mb()).epsilon(1e-12));
  // theta = 0: beta- = 0; the surviving Min terms cancel exactly, matching
  // the colinear cancellation of |psi|^2 and the limit form
  const double t0 = exposure_kernel(eta, o, 0.0);
  CHECK(std::isfinite(t0));
  CHECK(t0 == 0.0);
  CHECK(exposure_kernel_limit(o, 0.0) == 0.0);
  // random angles: exact -> limit as |eta| grows
  auto rng = make_engine(61, 0);
  std::uniform_real_distribution<double> u(0.0, k::pi);
  for (int i = 0; i < 50; ++i) {
    const double th = u(rng);
    CHECK(exposure_kernel(1e4 * o.tau_lm(), o, th) ==
          doctest::Approx(exposure_kernel_limit(o, th)).epsilon(1e-12).scale(o.tau_mb()));
  }
}

TEST_CASE("photon time ratio y(x)") {
  CHECK(photon_time_ratio(0.5) == doctest::Approx(5.0 * k::pi / 12.0).epsilon(1e-15));
  CHECK(photon_time_ratio(1.0) == doctest::Approx(5.0 * k::pi / 12.0).epsilon(1e-15));
  CHECK(photon_time_ratio(0.5) == doctest::Approx(1.3090).epsilon(1e-4));
  // continuity at x = 1
  CHECK(std::abs(photon_time_ratio(1.0 + 1e-13) - photon_time_ratio(1.0)) < 1e-12);
  CHECK(photon_time_ratio(3.0) == doctest::Approx(2.0846988288).epsilon(1e-9));
  CHECK(photon_time_ratio(1e12) == doctest::Approx(5.0 * k::pi / 4.0).epsilon(1e-10));
  CHECK_THROWS_AS(photon_time_ratio(0.0), std::domain_error);
  CHECK_THROWS_AS(photon_time_ratio(-1.0), std::domain_error);
}

TEST_CASE("y(x) reconstructed from the angular average of the kernel") {
  // the kernel is phi-independent: a 1-D rule in cos(theta) suffices
  const auto q = AngularQuadrature::gauss_legendre(4096, 1);
  for (const double x : {0.5, 1.0, 2.0, 3.0, 5.0, 10.0}) {
    const double yq = photon_time_ratio_from_quadrature(x, q);
    CHECK(yq == doctest::Approx(photon_time_ratio(x)).epsilon(1e-6));
  }
}

TEST_CASE("flat photonic variance: hyper numbers") {
  const RhombGeometry g = presets::hyper_cs_rhomb();
  const RamanOptics o = presets::hyper_cs_optics();
  const double half = 0.5 * flat_photonic_variance(g, o, 1e-34);
  // independent arithmetic: (4/pi) Omega^2 S_h y(3) tau_mb
  const double expect = (4.0 / k::pi) * 4e30 * 1e-34 * photon_time_ratio(3.0) * 1e-9;
  CHECK(half == doctest::Approx(expect).epsilon(1e-14));
  CHECK(half == doctest::Approx(1.0617e-12).epsilon(1e-4));
  CHECK(flat_photonic_variance(g, o, 0.0) == 0.0);
}

TEST_CASE("flat photonic variance vs the spectral integral (wide-aperture scale model)") {
  // The closed form needs tau_ab >> photonic times and 2 sin(alpha) tau_ab >>
  // photonic times; a wide-aperture instrument at ratio 40 satisfies both
  // while the angular quadrature still resolves the support band.
  const double tau_ab = 1.0, tau_mb = tau_ab / 40.0, tau_lm = 3.0 * tau_mb;
  const RhombGeometry g = RhombGeometry::from_transverse_kick(0.9, 0.2, tau_ab, 2e-25);
  const RamanOptics o = RamanOptics::make(2e5, tau_mb, tau_lm, 2e-25);
  const double s_h = 1e-30, gamma = 1e-3;
  auto bg = GwBackground::flat(s_h, {gamma, 1e4 / tau_mb});
  auto rsp =
      ApparatusResponse::photonic(g, o, AngularQuadrature::gauss_legendre(256, 384), 2);
  IntegrationOptions opts;
  opts.rel_tol = 1e-3;
  opts.cutoff_factor = 6.0;
  opts.phase_per_panel = 2.0 * k::pi;
  auto r = variance_integral(bg, rsp, LorentzianHighPass(gamma), opts);
  CHECK(r.variance == doctest::Approx(flat_photonic_variance(g, o, s_h)).epsilon(0.10));
}

TEST_CASE("equivalent mirror noise") {
  const double tau = 1.0 / k::c_light;  // c tau = 1 m
  CHECK(equivalent_mirror_noise(1e-34, tau) == doctest::Approx(1e-34).epsilon(1e-12));
  CHECK(std::sqrt(equivalent_mirror_noise(1e-34, tau)) == doctest::Approx(1e-17).epsilon(1e-12));
  CHECK(equivalent_mirror_noise(0.0, tau) == 0.0);
  CHECK(equivalent_mirror_noise(1e-34, 2.0 * tau) ==
        doctest::Approx(4.0 * equivalent_mirror_noise(1e-34, tau)).epsilon(1e-14));
  CHECK_THROWS_AS(equivalent_mirror_noise(1e-34, 0.0), std::invalid_argument);
}

TEST_CASE("f-algebra product identity on random inputs") {
  auto rng = make_engine(62, 0);
  std::uniform_real_distribution<double> u(-25.0, 25.0);
  for (int i = 0; i < 100; ++i) {
    const double x = u(rng), y = u(rng);
    CHECK(f_osc(x) * f_osc(y) ==
          doctest::Approx(2.0 * f_osc(x) + 2.0 * f_osc(y) - f_osc(x + y) - f_osc(x - y))
              .epsilon(1e-12)
              .scale(16.0));
  }
}

TEST_CASE("variance is monotone in the spectrum level and band width") {
  const RhombGeometry g = presets::hyper_cs_rhomb();
  auto rsp = ApparatusResponse::atomic(g);
  LorentzianHighPass flt(1.0 / 86400.0);
  auto v = [&](double level, double top_hz) {
    auto bg = GwBackground::flat(level, {k::two_pi * 1e-6, k::two_pi * top_hz});
    return variance_integral(bg, rsp, flt).variance;
  };
  CHECK(v(2e-34, 1e-4) > v(1e-34, 1e-4));
  CHECK(v(1e-34, 1e-3) > v(1e-34, 1e-4));
  // linear in S_h
  CHECK(v(2e-34, 1e-4) == doctest::Approx(2.0 * v(1e-34, 1e-4)).epsilon(1e-9));
}

TEST_CASE("filter limits: small Gamma recovers the unfiltered integral") {
  const double tau = 1.0;
  auto rsp = ApparatusResponse::custom(
      [tau](double w) { return w == 0.0 ? tau * tau : f_osc(w * tau) / (w * w); }, tau, tau, 2.0);
  auto bg = GwBackground::flat(1.0, {1e-9, 1e8});
  IntegrationOptions opts;
  opts.rel_tol = 1e-8;
  // as Gamma decreases the high-pass gain approaches 1 and the variance
  // approaches the unfiltered integral S_h |tau|; variance decreases with
  // growing Gamma
  const double v_small = variance_integral(bg, rsp, LorentzianHighPass(1e-7), opts).variance;
  const double v_mid = variance_integral(bg, rsp, LorentzianHighPass(1e-1), opts).variance;
  const double v_big = variance_integral(bg, rsp, LorentzianHighPass(10.0), opts).variance;
  CHECK(v_small == doctest::Approx(tau).epsilon(1e-6));
  CHECK(v_small > v_mid);
  CHECK(v_mid > v_big);
}

TEST_CASE("non-convergence propagates with partial estimate") {
  const RhombGeometry g = presets::hyper_cs_rhomb();
  auto bg = GwBackground::flat(1e-34, {1e-10, 1e8});
  IntegrationOptions opts;
  opts.rel_tol = 1e-15;
  opts.max_panels = 50;
  CHECK_THROWS_AS(
      variance_integral(bg, ApparatusResponse::atomic(g), LorentzianHighPass(1.0), opts),
      NonConvergenceError);
}

TEST_SUITE_END();
