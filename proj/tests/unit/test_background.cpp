#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "gravidec/background.hpp"
#include "gravidec/rng.hpp"

using namespace gravidec;
namespace k = gravidec::constants;

namespace {
const Band kMicroBand{k::two_pi * 1e-6, k::two_pi * 1e-4};
}

TEST_SUITE_BEGIN("background");

TEST_CASE("flat spectrum: band cutoff and evenness") {
  auto bg = GwBackground::flat(1e-34, kMicroBand);
  CHECK(bg(k::two_pi * 1e-5) == 1e-34);
  CHECK(bg(k::two_pi * 1.0) == 0.0);   // outside band
  CHECK(bg(-k::two_pi * 1e-5) == 1e-34);  // even in omega
  CHECK(bg(k::two_pi * 0.9e-6) == 0.0);
}

TEST_CASE("flat spectrum: validation") {
  CHECK_THROWS_AS(GwBackground::flat(-1e-34, kMicroBand), std::invalid_argument);
  CHECK_THROWS_AS(GwBackground::flat(1e-34, Band{0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(GwBackground::flat(1e-34, Band{2.0, 1.0}), std::invalid_argument);
}

TEST_CASE("effective temperature") {
  auto bg = GwBackground::flat(1e-34, kMicroBand);
  const double w = k::two_pi * 1e-5;
  // independent arithmetic chain: T = 5 c^5 S_h / (16 G k_B)
  const double c5 = std::pow(k::c_light, 5);
  const double expect = 5.0 * c5 * 1e-34 / (16.0 * k::newton_g * k::k_boltzmann);
  CHECK(bg.effective_temperature(w) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(bg.effective_temperature(w) == doctest::Approx(8.21229478e40).epsilon(1e-8));
  // S_h = 0 -> 0 K, no error
  auto zero = GwBackground::flat(0.0, kMicroBand);
  CHECK(zero.effective_temperature(w) == 0.0);
  // linear in S_h
  auto bg2 = GwBackground::flat(2e-34, kMicroBand);
  CHECK(bg2.effective_temperature(w) ==
        doctest::Approx(2.0 * bg.effective_temperature(w)).epsilon(1e-14));
}

TEST_CASE("graviton number") {
  auto bg = GwBackground::flat(1e-34, kMicroBand);
  const double w = k::two_pi * 1e-5;
  CHECK(bg.graviton_number(w) == doctest::Approx(1.711164586e56).epsilon(1e-8));
  CHECK_THROWS_AS(bg.graviton_number(0.0), std::domain_error);
  auto zero = GwBackground::flat(0.0, kMicroBand);
  CHECK(zero.graviton_number(w) == 0.0);
}

TEST_CASE("thermodynamic chain: Theta = pi kB T/hbar = pi |w| n(w)") {
  auto bg = GwBackground::flat(1e-34, kMicroBand);
  CHECK(bg.theta_gw(k::two_pi * 1e-5) == doctest::Approx(3.377703505e52).epsilon(1e-8));
  auto rng = make_engine(11, 0);
  std::uniform_real_distribution<double> u(std::log(kMicroBand.omega_min),
                                           std::log(kMicroBand.omega_max));
  for (int i = 0; i < 50; ++i) {
    const double w = std::exp(u(rng));
    const double t = bg.effective_temperature(w);
    const double n = bg.graviton_number(w);
    CHECK(n * k::hbar * w == doctest::Approx(k::k_boltzmann * t).epsilon(1e-12));
    CHECK(bg.theta_gw(w) == doctest::Approx(k::pi * w * n).epsilon(1e-12));
    CHECK(bg.theta_gw(w) ==
          doctest::Approx(k::pi * k::k_boltzmann * t / k::hbar).epsilon(1e-12));
  }
}

TEST_CASE("evenness and nonnegativity over random omega") {
  std::vector<PowerLawSegment> segs{{k::two_pi * 1e-6, 1e-34, 0.0},
                                    {k::two_pi * 1e-5, 1e-34, -2.0 / 3.0}};
  auto bg = GwBackground::piecewise_power_law(segs, kMicroBand);
  auto rng = make_engine(12, 0);
  std::uniform_real_distribution<double> u(-1e-3, 1e-3);
  for (int i = 0; i < 200; ++i) {
    const double w = u(rng);
    CHECK(bg(w) >= 0.0);
    CHECK(bg(w) == bg(-w));
  }
}

TEST_CASE("piecewise power law evaluation") {
  std::vector<PowerLawSegment> segs{{1.0, 2.0, 0.0}, {10.0, 3.0, -1.0}};
  auto bg = GwBackground::piecewise_power_law(segs, Band{0.5, 1000.0});
  CHECK(bg(5.0) == doctest::Approx(2.0));
  CHECK(bg(20.0) == doctest::Approx(3.0 * (10.0 / 20.0)).epsilon(1e-14));
  CHECK(bg(0.7) == doctest::Approx(2.0));  // first law extends to the band floor
  CHECK_THROWS_AS(
      GwBackground::piecewise_power_law({{10.0, 1.0, 0.0}, {1.0, 1.0, 0.0}}, Band{0.5, 100.0}),
      std::invalid_argument);
}

TEST_CASE("tabulated spectrum: node reproduction and log-log interpolation") {
  std::vector<std::pair<double, double>> nodes{{1.0, 1e-30}, {10.0, 1e-32}, {100.0, 1e-36}};
  auto bg = GwBackground::tabulated(nodes, Band{1.0, 100.0});
  for (const auto& [w, s] : nodes) CHECK(bg(w) == s);  // exact at the nodes
  // geometric midpoint of a log-log segment is the geometric mean of values
  CHECK(bg(std::sqrt(10.0)) == doctest::Approx(std::sqrt(1e-30 * 1e-32)).epsilon(1e-12));

  CHECK_THROWS_AS(GwBackground::tabulated({{10.0, 1e-30}, {1.0, 1e-32}}, Band{1.0, 10.0}),
                  std::invalid_argument);  // unsorted
  CHECK_THROWS_AS(GwBackground::tabulated({{1.0, -1e-30}, {10.0, 1e-32}}, Band{1.0, 10.0}),
                  std::invalid_argument);  // negative value
  CHECK_THROWS_AS(GwBackground::tabulated(nodes, Band{0.5, 100.0}),
                  std::invalid_argument);  // band outside the table
}

TEST_CASE("tabulated spectrum from file") {
  const char* path = "bg_table_test.txt";
  {
    std::ofstream out(path);
    out << "# frequency_Hz  S_h_per_Hz\n";
    out << "1e-6 1e-34\n\n";
    out << "1e-5 2e-34   # midpoint\n";
    out << "1e-4 1e-34\n";
  }
  auto bg = GwBackground::tabulated_from_file(path);
  CHECK(bg.band().omega_min == doctest::Approx(k::two_pi * 1e-6));
  CHECK(bg.band().omega_max == doctest::Approx(k::two_pi * 1e-4));
  CHECK(bg(k::two_pi * 1e-5) == doctest::Approx(2e-34));
  std::remove(path);
  CHECK_THROWS(GwBackground::tabulated_from_file("no_such_file.txt"));
}

TEST_SUITE_END();
