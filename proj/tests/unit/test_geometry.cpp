#include <doctest.h>

#include <cmath>
#include <random>

#include "gravidec/geometry.hpp"
#include "gravidec/kinematics.hpp"
#include "gravidec/presets.hpp"
#include "gravidec/rng.hpp"

using namespace gravidec;
namespace k = gravidec::constants;

TEST_SUITE_BEGIN("geometry");

TEST_CASE("hyper-cs rhomb: derived quantities") {
  const RhombGeometry g = presets::hyper_cs_rhomb();
  // Omega_at = m v^2 / 2 hbar with the pinned preset numbers
  CHECK(g.omega_atomic() ==
        doctest::Approx(2e-25 * 0.04 / (2.0 * k::hbar)).epsilon(1e-15));
  CHECK(g.omega_atomic() == doctest::Approx(3.7930086e7).epsilon(1e-7));
  CHECK(g.side_length() == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(g.sin_two_alpha() == doctest::Approx(0.035).epsilon(1e-14));
}

TEST_CASE("apex coordinates and rhomb symmetry") {
  const RhombGeometry g = presets::hyper_cs_rhomb();
  const auto a = g.apex_event(Apex::A), b = g.apex_event(Apex::B);
  const auto c = g.apex_event(Apex::C), d = g.apex_event(Apex::D);
  CHECK(d.t == g.tau_ab());
  CHECK(d.x.x == doctest::Approx(g.side_length() * std::cos(g.alpha())).epsilon(1e-15));
  CHECK(d.x.y == 0.0);
  CHECK(d.x.z == 0.0);
  CHECK(b.t == 0.0);
  CHECK(b.x.z == doctest::Approx(g.side_length() * std::sin(g.alpha())).epsilon(1e-15));
  // A = -D and C = -B component-wise, exactly
  CHECK(a.t == -d.t);
  CHECK(a.x.x == -d.x.x);
  CHECK(a.x.z == -d.x.z);
  CHECK(c.t == b.t);
  CHECK(c.x.z == -b.x.z);
}

TEST_CASE("segment reduced velocities") {
  const RhombGeometry g = presets::hyper_cs_rhomb();
  const double u = g.v_atom() / k::c_light;
  const Vec3 uab = g.reduced_velocity(Segment::AB);
  CHECK(uab.x == doctest::Approx(u * std::cos(g.alpha())).epsilon(1e-15));
  CHECK(uab.z == doctest::Approx(u * std::sin(g.alpha())).epsilon(1e-15));
  const Vec3 ubd = g.reduced_velocity(Segment::BD);
  CHECK(ubd.z == doctest::Approx(-uab.z).epsilon(1e-15));
  const Vec3 uac = g.reduced_velocity(Segment::AC);
  const Vec3 ucd = g.reduced_velocity(Segment::CD);
  CHECK(ubd.x == uac.x);
  CHECK(ubd.z == uac.z);
  CHECK(ucd.x == uab.x);
  CHECK(ucd.z == uab.z);
}

TEST_CASE("make_rhomb validation names the offending field") {
  CHECK_THROWS_WITH_AS(RhombGeometry::make(0.9, 0.2, 1.5, 2e-25),
                       doctest::Contains("alpha"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(RhombGeometry::make(0.0175, 4e5, 1.5, 2e-25),
                       doctest::Contains("v_atom"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(RhombGeometry::make(0.0175, 0.2, -1.0, 2e-25),
                       doctest::Contains("tau_ab"), std::invalid_argument);
  CHECK_THROWS_WITH_AS(RhombGeometry::make(0.0175, 0.2, 1.5, 0.0),
                       doctest::Contains("mass"), std::invalid_argument);
  CHECK_THROWS_AS(RhombGeometry::from_transverse_kick(1.5, 0.2, 1.5, 2e-25),
                  std::invalid_argument);
}

TEST_CASE("aperture from the transverse kick matches the direct path") {
  const RhombGeometry g1 = RhombGeometry::from_transverse_kick(0.035, 0.2, 1.5, 2e-25);
  const RhombGeometry g2 =
      RhombGeometry::make(0.5 * std::asin(0.035), 0.2, 1.5, 2e-25);
  CHECK(g1.alpha() == g2.alpha());
  CHECK(g1.sin_two_alpha() == doctest::Approx(0.035).epsilon(1e-14));
}

TEST_CASE("raman optics: derived quantities and events") {
  const RamanOptics o = presets::hyper_cs_optics();
  CHECK(o.v_trans() == doctest::Approx(7.035345879e-3).epsilon(1e-9));
  CHECK(o.v_trans() / 0.2 == doctest::Approx(0.035).epsilon(0.01));
  CHECK(o.x_ratio() == doctest::Approx(3.0).epsilon(1e-15));

  const SpacetimeEvent apex{0.0, {0.0, 0.0, 1.0}};
  const auto m = o.mirror_event(apex);
  CHECK(m.t == doctest::Approx(-1e-9));
  CHECK(m.x.z == doctest::Approx(1.0 + k::c_light * 1e-9));
  const auto l = o.laser_event(apex);
  CHECK(l.t == doctest::Approx(-(1e-9 + 3e-9)));
  CHECK(l.x.z == doctest::Approx(1.0 - k::c_light * (3e-9 - 1e-9)));
  const auto lp = o.laser_prime_event(apex);
  CHECK(lp.t == doctest::Approx(-(3e-9 - 1e-9)));
  CHECK(lp.x.z == l.x.z);

  // x = 1 boundary: tau_lm = tau_mb is a valid configuration
  const RamanOptics eq = RamanOptics::make(2e15, 1e-9, 1e-9, 2e-25);
  CHECK(eq.x_ratio() == 1.0);
  CHECK_THROWS_AS(RamanOptics::make(2e15, 0.0, 1e-9, 2e-25), std::invalid_argument);
  CHECK_THROWS_AS(RamanOptics::make(2e15, 1e-9, -1e-9, 2e-25), std::invalid_argument);
}

TEST_CASE("consistent instrument check") {
  const RhombGeometry g = presets::hyper_cs_rhomb();
  const RamanOptics o = presets::hyper_cs_optics();
  CHECK_NOTHROW(check_instrument_consistency(g, o));  // 0.035 vs 0.03518: ~0.5%
  const RhombGeometry off = RhombGeometry::from_transverse_kick(0.05, 0.2, 1.5, 2e-25);
  CHECK_THROWS_AS(check_instrument_consistency(off, o), std::invalid_argument);
}

TEST_CASE("idempotent reconstruction") {
  const RhombGeometry g1 = presets::hyper_cs_rhomb();
  const RhombGeometry g2 = RhombGeometry::make(g1.alpha(), g1.v_atom(), g1.tau_ab(), g1.mass());
  CHECK(g1.omega_atomic() == g2.omega_atomic());
  CHECK(g1.side_length() == g2.side_length());
  CHECK(g1.apex_event(Apex::D).x.x == g2.apex_event(Apex::D).x.x);
}

TEST_CASE("wavefront phase times") {
  const RhombGeometry g = presets::hyper_cs_rhomb();
  // at theta = pi/2, phi = 0: eta_AB = tau_ab (1 - cos(alpha))
  const Vec3 n = Direction{k::pi / 2, 0.0}.unit_vector();
  const double eta_ab = g.wavefront_phase_time(Apex::B, n) - g.wavefront_phase_time(Apex::A, n);
  CHECK(eta_ab == doctest::Approx(g.tau_ab() * (1.0 - std::cos(g.alpha()))).epsilon(1e-12));
  // difference relations eta_AD = eta_AB + eta_AC, eta_BC = eta_AC - eta_AB
  auto rng = make_engine(31, 0);
  std::uniform_real_distribution<double> u11(-1.0, 1.0), u02(0.0, k::two_pi);
  for (int i = 0; i < 50; ++i) {
    const Vec3 m = Direction{std::acos(u11(rng)), u02(rng)}.unit_vector();
    const double ea = g.wavefront_phase_time(Apex::A, m);
    const double eb = g.wavefront_phase_time(Apex::B, m);
    const double ec = g.wavefront_phase_time(Apex::C, m);
    const double ed = g.wavefront_phase_time(Apex::D, m);
    CHECK(ed - ea == doctest::Approx((eb - ea) + (ec - ea)).epsilon(1e-12));
    CHECK(ec - eb == doctest::Approx((ec - ea) - (eb - ea)).epsilon(1e-12));
  }
  // modes along a side have vanishing phase-time difference across that side
  const Vec3 along_ab{std::cos(g.alpha()), 0.0, std::sin(g.alpha())};
  const double eta_side =
      g.wavefront_phase_time(Apex::B, along_ab) - g.wavefront_phase_time(Apex::A, along_ab);
  CHECK(std::abs(eta_side) < 1e-15 * g.tau_ab());
}

TEST_SUITE_END();
