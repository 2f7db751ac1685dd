#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>

#include "gravidec/background.hpp"
#include "gravidec/geometry.hpp"
#include "gravidec/kinematics.hpp"
#include "gravidec/quadrature.hpp"
#include "gravidec/response.hpp"

// The phase-noise variance integral with the detection filter, fringe
// visibility, and the flat-spectrum closed forms.
//
//   DeltaPhi^2 = int dOmega/2pi S_h(Omega) A(Omega) |H(Omega)|^2
//              = (1/pi) int_0^inf dOmega S_h A |H|^2         (even integrand)
//   V = exp(-DeltaPhi^2 / 2)

namespace gravidec {

// Detection filter interface.  Only the Lorentzian averaging filter ships;
// other detection strategies plug in through highpass_gain2.
class DetectionFilter {
 public:
  virtual ~DetectionFilter() = default;
  virtual double highpass_gain2(double omega) const = 0;  // |H(omega)|^2
  virtual double bandwidth() const = 0;                   // Gamma, rad/s
};

// delta_Phi(omega) = (-i omega / (Gamma - i omega)) Phi(omega), Gamma = 1/tau_av.
class LorentzianHighPass final : public DetectionFilter {
 public:
  explicit LorentzianHighPass(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0)) throw std::invalid_argument("LorentzianHighPass: Gamma must be > 0");
  }
  static LorentzianHighPass from_averaging_time(double tau_av) {
    if (!(tau_av > 0.0))
      throw std::invalid_argument("LorentzianHighPass: tau_av must be > 0");
    return LorentzianHighPass(1.0 / tau_av);
  }
  double highpass_gain2(double omega) const override {
    const double w2 = omega * omega;
    return w2 / (w2 + gamma_ * gamma_);
  }
  double bandwidth() const override { return gamma_; }

 private:
  double gamma_;
};

inline double visibility(double variance) {
  if (!(variance >= 0.0)) throw std::domain_error("visibility: variance must be >= 0");
  return std::exp(-0.5 * variance);
}

struct DephasingBreakdown {
  double atomic = 0.0;    // rad^2
  double photonic = 0.0;  // rad^2
  std::optional<double> cross;  // present only for the exact combined mode
};

struct DecoherenceResult {
  double variance = 0.0;    // rad^2
  double visibility = 1.0;  // exp(-variance/2)
  DephasingBreakdown breakdown;
  QuadratureDiagnostics diagnostics;
};

struct IntegrationOptions {
  double rel_tol = 1e-6;
  std::size_t max_panels = 500000;
  double phase_per_panel = 0.5 * constants::pi;  // initial panel width cap
  // Numerical integration stops at cutoff_factor / support_time; the rest of
  // the band (if any) is handled with the response's asymptotic mean level
  // M/omega^2, integrated against the filter on a smooth grid.
  double cutoff_factor = 1000.0;
};

namespace detail {

inline double half_line_variance(const GwBackground& bg, const ApparatusResponse& rsp,
                                 const DetectionFilter& flt, const IntegrationOptions& opts,
                                 QuadratureDiagnostics& diag) {
  const Band band = bg.band();
  double cap = band.omega_max;
  if (rsp.support_time() > 0.0)
    cap = std::min(cap, std::max(band.omega_min * 8.0, opts.cutoff_factor / rsp.support_time()));

  PanelOptions popts;
  popts.rel_tol = opts.rel_tol;
  popts.max_panels = opts.max_panels;
  popts.phase_per_panel = opts.phase_per_panel;

  auto main_integrand = [&](double w) { return bg(w) * rsp(w) * flt.highpass_gain2(w); };
  double value =
      integrate_adaptive(main_integrand, band.omega_min, cap, rsp.oscillation_time(), popts,
                         &diag) / constants::pi;

  if (cap < band.omega_max) {
    const double m = rsp.asymptotic_level();
    auto tail_integrand = [&](double w) { return bg(w) * (m / (w * w)) * flt.highpass_gain2(w); };
    value += integrate_adaptive(tail_integrand, cap, band.omega_max, 0.0, popts, &diag) /
             constants::pi;
    diag.warnings.push_back("high-frequency tail beyond the cutoff integrated at the asymptotic mean level");
  }
  return value;
}

}  // namespace detail

// Spectral variance of the filtered dephasing; throws NonConvergenceError (with the
// partial estimate and achieved error) if the panel budget is exhausted.
inline DecoherenceResult variance_integral(const GwBackground& bg, const ApparatusResponse& rsp,
                                           const DetectionFilter& flt,
                                           const IntegrationOptions& opts = {}) {
  DecoherenceResult r;
  using Kind = ApparatusResponse::Kind;
  switch (rsp.kind()) {
    case Kind::atomic:
      r.breakdown.atomic = detail::half_line_variance(bg, rsp, flt, opts, r.diagnostics);
      r.variance = r.breakdown.atomic;
      break;
    case Kind::photonic:
      r.breakdown.photonic = detail::half_line_variance(bg, rsp, flt, opts, r.diagnostics);
      r.variance = r.breakdown.photonic;
      break;
    case Kind::combined_sum:
      r.breakdown.atomic =
          detail::half_line_variance(bg, *rsp.atomic_part(), flt, opts, r.diagnostics);
      r.breakdown.photonic =
          detail::half_line_variance(bg, *rsp.photonic_part(), flt, opts, r.diagnostics);
      r.variance = r.breakdown.atomic + r.breakdown.photonic;
      break;
    case Kind::combined_exact: {
      const double total = detail::half_line_variance(bg, rsp, flt, opts, r.diagnostics);
      r.breakdown.atomic =
          detail::half_line_variance(bg, *rsp.atomic_part(), flt, opts, r.diagnostics);
      r.breakdown.photonic =
          detail::half_line_variance(bg, *rsp.photonic_part(), flt, opts, r.diagnostics);
      r.breakdown.cross = total - r.breakdown.atomic - r.breakdown.photonic;
      r.variance = total;
      break;
    }
    case Kind::custom:
      r.variance = detail::half_line_variance(bg, rsp, flt, opts, r.diagnostics);
      break;
  }
  r.visibility = visibility(r.variance);
  return r;
}

// Flat-spectrum atomic variance with the exact Gamma dependence:
//     DeltaPhi_at^2 = 4 S_h Omega_at^2 sin^2(2 alpha) (3 - 4 e^{-G tau} + e^{-2 G tau}) / Gamma
// (follows from A_at and int dOmega/2pi f(Omega tau)/(Omega^2+Gamma^2) =
// (1 - e^{-Gamma tau})/Gamma with f^2(x) = 4 f(x) - f(2x)).
inline double flat_atomic_variance(const RhombGeometry& g, double s_h, double gamma) {
  if (!(s_h >= 0.0)) throw std::invalid_argument("flat_atomic_variance: S_h must be >= 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("flat_atomic_variance: Gamma must be > 0");
  const double os = g.omega_atomic() * g.sin_two_alpha();
  const double e1 = std::exp(-gamma * g.tau_ab());
  return 4.0 * s_h * os * os * (3.0 - 4.0 * e1 + e1 * e1) / gamma;
}

// Gamma*tau_ab << 1 limit: DeltaPhi_at^2 = 8 S_h Omega_at^2 sin^2(2 alpha) tau_ab.
inline double flat_atomic_variance_small_gamma(const RhombGeometry& g, double s_h) {
  if (!(s_h >= 0.0))
    throw std::invalid_argument("flat_atomic_variance_small_gamma: S_h must be >= 0");
  const double os = g.omega_atomic() * g.sin_two_alpha();
  return 8.0 * s_h * os * os * g.tau_ab();
}

// Exposure kernel T(eta): the Min-form frequency integral of
// |psi_k|^2 f(omega eta)/omega^2 (per dOmega/4pi), used to build the
// equivalent photonic interaction time.
inline double exposure_kernel(double eta, const RamanOptics& o, double theta) {
  const double c = std::cos(theta);
  const double bp = 1.0 + c, bm = 1.0 - c;
  const double tlm = o.tau_lm(), tmb = o.tau_mb();
  const double e = std::abs(eta);
  auto mn = [e](double t) { return std::min(e, std::abs(t)); };
  const double c1 = bp * (bp - bm);
  double v = c1 * (mn((tlm - tmb) * bm) + mn(tlm * bm) + mn(tmb * bp) -
                   mn((tlm - tmb) * bm - tmb * bp) - mn(tlm * bm + tmb * bp));
  v += bp * bp * mn(tmb * (bp + bm));
  v += bm * (bm - bp) * mn(tmb * bp);
  return v;
}

// |eta| >> photonic times limit of the exposure kernel (eta-independent).
inline double exposure_kernel_limit(const RamanOptics& o, double theta) {
  const double c = std::cos(theta);
  const double bp = 1.0 + c, bm = 1.0 - c;
  const double tlm = o.tau_lm(), tmb = o.tau_mb();
  return bp * (bp - bm) * (std::abs(tlm - tmb) * bm - std::abs((tlm - tmb) * bm - tmb * bp)) +
         bp * (bp * bp + bm * bm) * tmb;
}

// y(x) = tau_phot / tau_mb as a function of x = tau_lm / tau_mb:
//     5 pi/12 for x <= 1,  (5 pi/2)(1/2 - (3x^2 - 3x + 1)/(3x^3)) for x >= 1;
// continuous at x = 1, limit 5 pi/4 for x -> inf.
inline double photon_time_ratio(double x) {
  if (!(x > 0.0)) throw std::domain_error("photon_time_ratio: x must be > 0");
  if (x <= 1.0) return 5.0 * constants::pi / 12.0;
  const double b = (3.0 * x * x - 3.0 * x + 1.0) / (3.0 * x * x * x);
  return 2.5 * constants::pi * (0.5 - b);
}

// Independent reconstruction y = (5 pi/16) < T_limit/tau_mb >_n via angular
// quadrature (the kernel depends on theta only).
inline double photon_time_ratio_from_quadrature(double x, const AngularQuadrature& q,
                                                unsigned jobs = 1) {
  if (!(x > 0.0)) throw std::domain_error("photon_time_ratio_from_quadrature: x must be > 0");
  const RamanOptics o = RamanOptics::make(1.0, 1.0, x, 1.0);  // tau_mb = 1, tau_lm = x
  const double mean =
      q.average([&](const Direction& d) { return exposure_kernel_limit(o, d.theta); }, jobs);
  return (5.0 * constants::pi / 16.0) * mean;
}

// Flat-spectrum photonic variance:
//     DeltaPhi_phot^2 = (8/pi) Omega_phot^2 S_h y(x) tau_mb.
inline double flat_photonic_variance(const RhombGeometry&, const RamanOptics& o, double s_h) {
  if (!(s_h >= 0.0)) throw std::invalid_argument("flat_photonic_variance: S_h must be >= 0");
  const double y = photon_time_ratio(o.x_ratio());
  return (8.0 / constants::pi) * o.omega_phot() * o.omega_phot() * s_h * y * o.tau_mb();
}

// Position noise equivalent to the strain level over an optical path of
// flight time tau: S_q = S_h (c tau)^2, in m^2/Hz.
inline double equivalent_mirror_noise(double s_h, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("equivalent_mirror_noise: tau must be > 0");
  const double ct = constants::c_light * tau;
  return s_h * ct * ct;
}

}  // namespace gravidec
