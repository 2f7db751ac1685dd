#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "gravidec/background.hpp"
#include "gravidec/constants.hpp"
#include "gravidec/decoherence.hpp"
#include "gravidec/geometry.hpp"
#include "gravidec/kinematics.hpp"
#include "gravidec/linalg.hpp"
#include "gravidec/parallel.hpp"
#include "gravidec/quadrature.hpp"
#include "gravidec/rng.hpp"

// Independent time-domain verification path: synthesize Gaussian stochastic
// strain fields consistent with S_h, accumulate the eikonal dephasing along
// the interferometer worldlines and laser paths by numerical time
// integration, filter the resulting launch-time series, and estimate the
// variance/visibility empirically.
//
// Mode discretization: independent circular complex Gaussian amplitudes per
// (frequency bin x direction sample x helicity), with per-mode variance
//     sigma^2 = S_h(omega) * dOmega/(2 pi) * 5/(2 N_dir)   (per helicity),
// fixed by requiring <h12(t)^2> = int_band dOmega/pi S_h(omega).  Negative-
// frequency partners enter through conjugation (the field is built as 2*Re
// of the positive-frequency sum).

namespace gravidec::mc {

struct FrequencyGrid {
  int n_bins = 64;
  Band band{};
};

struct GwMode {
  double omega = 0.0;  // rad/s, bin center
  Direction dir{};
  int helicity = 1;
  cdouble amplitude{};  // drawn coefficient
};

class FieldRealization {
 public:
  std::vector<GwMode> modes;
  Band band{};
  int n_dir = 0;
  std::uint64_t seed = 0;

  double max_omega() const {
    double w = 0.0;
    for (const auto& m : modes) w = std::max(w, m.omega);
    return w;
  }

  void scale_amplitudes(double factor) {
    for (auto& m : modes) m.amplitude *= factor;
  }
};

// Optional frame rotation for the direction sample (isotropy checks).
inline Direction rotate_direction(const Direction& d, const Mat3& r) {
  const Vec3 n = d.unit_vector();
  const Vec3 m{r[0][0] * n.x + r[0][1] * n.y + r[0][2] * n.z,
               r[1][0] * n.x + r[1][1] * n.y + r[1][2] * n.z,
               r[2][0] * n.x + r[2][1] * n.y + r[2][2] * n.z};
  double phi = std::atan2(m.y, m.x);
  if (phi < 0.0) phi += constants::two_pi;
  return {std::acos(std::clamp(m.z, -1.0, 1.0)), phi};
}

inline FieldRealization synthesize(const GwBackground& bg, const FrequencyGrid& grid, int n_dir,
                                   std::uint64_t seed, const Mat3* rotate = nullptr) {
  if (grid.n_bins < 2) throw std::invalid_argument("synthesize: need at least 2 frequency bins");
  if (n_dir < 2) throw std::invalid_argument("synthesize: need at least 2 direction samples");
  if (!(grid.band.omega_min > 0.0) || !(grid.band.omega_max > grid.band.omega_min))
    throw std::invalid_argument("synthesize: empty frequency band");

  FieldRealization re;
  re.band = grid.band;
  re.n_dir = n_dir;
  re.seed = seed;

  auto rng = make_engine(seed, 0);
  std::uniform_real_distribution<double> u11(-1.0, 1.0), u02(0.0, constants::two_pi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Direction> dirs;
  dirs.reserve(n_dir);
  for (int d = 0; d < n_dir; ++d) {
    Direction dir{std::acos(u11(rng)), u02(rng)};
    if (rotate) dir = rotate_direction(dir, *rotate);
    dirs.push_back(dir);
  }

  const double dw = (grid.band.omega_max - grid.band.omega_min) / grid.n_bins;
  re.modes.reserve(static_cast<std::size_t>(grid.n_bins) * n_dir * 2);
  for (int j = 0; j < grid.n_bins; ++j) {
    const double w = grid.band.omega_min + (j + 0.5) * dw;
    const double sigma2 = bg(w) * dw / constants::two_pi * 5.0 / (2.0 * n_dir);
    const double amp = std::sqrt(0.5 * sigma2);
    for (int d = 0; d < n_dir; ++d)
      for (int hel : {+1, -1}) {
        const double g1 = gauss(rng), g2 = gauss(rng);
        re.modes.push_back({w, dirs[d], hel, cdouble(amp * g1, amp * g2)});
      }
  }
  return re;
}

// h_ij(t, x): real symmetric traceless by construction; the residual
// imaginary part of the two-partner complex sum is reported through
// max_imag (bookkeeping check).
inline Mat3 field_at(const FieldRealization& re, double t, const Vec3& x,
                     double* max_imag = nullptr) {
  CMat3 acc{};
  for (const auto& m : re.modes) {
    const Vec3 n = m.dir.unit_vector();
    const double eta = t - n.dot(x) / constants::c_light;
    const cdouble ph = std::exp(cdouble(0.0, -m.omega * eta));
    const CMat3 tt = polarization_tensor(m.dir, m.helicity);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        acc[i][j] += std::conj(tt[i][j]) * m.amplitude * ph +
                     tt[i][j] * std::conj(m.amplitude) * std::conj(ph);
  }
  Mat3 h{};
  double mi = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      h[i][j] = acc[i][j].real();
      mi = std::max(mi, std::abs(acc[i][j].imag()));
    }
  if (max_imag) *max_imag = mi;
  return h;
}

struct SegmentIntegrationOptions {
  int samples_per_period = 20;  // time-step resolution of the highest mode
  int min_intervals = 4;

  void validate() const {
    if (samples_per_period < 20)
      throw std::invalid_argument(
          "SegmentIntegrationOptions: under-resolved step (need >= 20 samples per period)");
    if (min_intervals < 2)
      throw std::invalid_argument("SegmentIntegrationOptions: need at least 2 intervals");
  }
};

enum class DephasingParts { atomic, photonic, combined };

namespace detail {

inline int simpson_intervals(double omega, double dt, const SegmentIntegrationOptions& seg) {
  const double periods = std::abs(omega) * std::abs(dt) / constants::two_pi;
  const double wanted = periods * seg.samples_per_period;
  if (!(wanted < 5e7))
    throw std::invalid_argument(
        "segment integration would need more than 5e7 time steps; the synthesized band "
        "does not fit the worldline duration");
  int m = std::max(seg.min_intervals, static_cast<int>(std::ceil(wanted)));
  if (m % 2) ++m;
  return m;
}

// Composite-Simpson integral of e^{-i omega eta(t)} dt along a line where
// the phase time runs linearly from eta_base + deta_start to
// eta_base + deta_start + deta_total over a duration dt.  The base/offset
// split matters: offsets are built from exact leg parameters, so the
// sub-light-crossing phase increments are not lost to the rounding of the
// absolute coordinates.
inline cdouble simpson_phase_offset_integral(double omega, double eta_base, double deta_start,
                                             double deta_total, double dt,
                                             const SegmentIntegrationOptions& seg) {
  if (dt == 0.0) return {};
  const int m = simpson_intervals(omega, dt, seg);
  const cdouble base = std::exp(cdouble(0.0, -omega * eta_base));
  cdouble sum{};
  for (int k = 0; k <= m; ++k) {
    const double wgt = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
    const double delta = deta_start + deta_total * (static_cast<double>(k) / m);
    sum += wgt * std::exp(cdouble(0.0, -omega * delta));
  }
  return base * sum * (dt / (3.0 * m));
}

// A stationary-phase leg of the Raman path, relative to the apex phase time:
// starts at eta_X + deta_start, advances by deta_total over duration dt.
struct RamanLeg {
  double deta_start;
  double deta_total;
  double dt;
  double sign;  // +1 for the L->M->atom path, -1 for the L'->atom path
};

// The three legs at one beam splitter for gravitational propagation
// direction cosine c_th = n.z (lasers run along x3): phase rates are
// beta_-= 1 - c_th for upward photons and beta_+ = 1 + c_th for the
// downward mirror->atom leg.
inline std::array<RamanLeg, 3> raman_legs(const RamanOptics& o, double c_th) {
  const double bp = 1.0 + c_th, bm = 1.0 - c_th;
  const double tlm = o.tau_lm(), tmb = o.tau_mb();
  return {{{-tmb * bp - tlm * bm, tlm * bm, tlm, +1.0},          // L -> M (up)
           {-tmb * bp, tmb * bp, tmb, +1.0},                     // M -> atom (down)
           {-(tlm - tmb) * bm, (tlm - tmb) * bm, tlm - tmb, -1.0}}};  // L' -> atom (up)
}

}  // namespace detail

// Numerical per-mode dephasing response R such that the launch-time series is
// Phi(t) = sum_modes 2 Re[ R a e^{-i omega t} ].  The atomic segments use the
// metric at the reference point (position phase dropped, slow-probe model);
// the photon legs carry the full position phase, anchored at the wavefront
// apex events.
inline cdouble mode_response(const RhombGeometry& g, const RamanOptics* optics,
                             DephasingParts parts, double omega, const Direction& dir,
                             int helicity, const SegmentIntegrationOptions& seg = {}) {
  seg.validate();
  if (parts != DephasingParts::atomic && optics == nullptr)
    throw std::invalid_argument("mode_response: photonic parts need RamanOptics");
  const Vec3 n = dir.unit_vector();
  const CVec3 ec = polarization_vector(dir, helicity).conj();
  const double inv_2s2 = 1.0 / (2.0 * std::sqrt(2.0));
  cdouble r{};

  if (parts != DephasingParts::photonic) {
    const double k0c = g.mass() * constants::c_light * constants::c_light / constants::hbar;
    struct Leg {
      Apex from, to;
      Segment s;
      double sign;
    };
    const Leg legs[4] = {{Apex::A, Apex::B, Segment::AB, +1.0},
                         {Apex::B, Apex::D, Segment::BD, +1.0},
                         {Apex::A, Apex::C, Segment::AC, -1.0},
                         {Apex::C, Apex::D, Segment::CD, -1.0}};
    for (const auto& leg : legs) {
      const cdouble eu = ec.dot(g.reduced_velocity(leg.s));
      // slow-probe segments: the metric is taken at the reference point, so
      // the phase time is the coordinate time itself
      const double t0 = g.apex_event(leg.from).t;
      const double dt = g.apex_event(leg.to).t - t0;
      const cdouble integral =
          detail::simpson_phase_offset_integral(omega, t0, 0.0, dt, dt, seg);
      r += leg.sign * k0c * inv_2s2 * eu * eu * integral;
    }
  }

  if (parts != DephasingParts::atomic) {
    const double k0c = optics->omega_phot();
    const cdouble e3 = ec.z;
    const cdouble pol = e3 * e3;  // (e*.u)^2 for beams along +-x3
    const auto legs = detail::raman_legs(*optics, n.z);
    const double apex_sign[4] = {+1.0, -1.0, -1.0, +1.0};
    const Apex apexes[4] = {Apex::A, Apex::B, Apex::C, Apex::D};
    for (int i = 0; i < 4; ++i) {
      const double eta_x = g.wavefront_phase_time(apexes[i], n);
      cdouble apex_sum{};
      for (const auto& leg : legs)
        apex_sum += leg.sign * detail::simpson_phase_offset_integral(
                                   omega, eta_x, leg.deta_start, leg.deta_total, leg.dt, seg);
      r += apex_sign[i] * k0c * inv_2s2 * pol * apex_sum;
    }
  }
  return r;
}

struct LaunchGrid {
  double t0 = 0.0;
  double dt = 0.0;  // s
  int count = 0;
};

// Dephasing time series Phi(t_j) over a uniform launch grid, through the
// per-mode responses (exact time-translation factorization for an
// interferometer at rest).
inline std::vector<double> dephasing_series(const FieldRealization& re, const RhombGeometry& g,
                                            const RamanOptics* optics, const LaunchGrid& launches,
                                            DephasingParts parts = DephasingParts::combined,
                                            const SegmentIntegrationOptions& seg = {}) {
  seg.validate();
  if (launches.count < 1 || !(launches.dt > 0.0))
    throw std::invalid_argument("dephasing_series: launch grid must have dt > 0 and count >= 1");

  // Group modes by frequency and collapse to per-frequency coefficients.
  std::vector<std::pair<double, cdouble>> groups;
  for (const auto& m : re.modes) {
    const cdouble z = mode_response(g, optics, parts, m.omega, m.dir, m.helicity, seg) *
                      m.amplitude;
    if (!groups.empty() && groups.back().first == m.omega)
      groups.back().second += z;
    else
      groups.emplace_back(m.omega, z);
  }

  std::vector<double> phi(launches.count, 0.0);
  for (const auto& [w, z] : groups) {
    const cdouble rot = std::exp(cdouble(0.0, -w * launches.dt));
    cdouble cur = std::exp(cdouble(0.0, -w * launches.t0));
    for (int j = 0; j < launches.count; ++j) {
      if (j % 256 == 0) cur = std::exp(cdouble(0.0, -w * (launches.t0 + j * launches.dt)));
      phi[j] += 2.0 * (z * cur).real();
      cur *= rot;
    }
  }
  return phi;
}

// Direct route for cross-checks: integrate the synthesized field itself
// along the worldlines of one launch (no per-mode factorization).
inline double dephasing_at_launch_direct(const FieldRealization& re, const RhombGeometry& g,
                                         const RamanOptics* optics, double t_launch,
                                         DephasingParts parts = DephasingParts::combined,
                                         const SegmentIntegrationOptions& seg = {}) {
  seg.validate();
  const double wmax = re.max_omega();
  auto simpson_h_uu = [&](const SpacetimeEvent& a, const SpacetimeEvent& b, const Vec3& u,
                          bool use_position) {
    const double dt = b.t - a.t;
    const int m = detail::simpson_intervals(wmax, dt, seg);
    const double h = dt / m;
    double sum = 0.0;
    for (int k = 0; k <= m; ++k) {
      const double wgt = (k == 0 || k == m) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      const double tt = a.t + k * h;
      const double lam = static_cast<double>(k) / m;
      const Vec3 x = use_position ? a.x + (b.x - a.x) * lam : Vec3{};
      const Mat3 hij = field_at(re, tt + t_launch, x);
      double huu = 0.0;
      const double uv[3] = {u.x, u.y, u.z};
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) huu += hij[i][j] * uv[i] * uv[j];
      sum += wgt * huu;
    }
    return sum * (h / 3.0);
  };

  double phi = 0.0;
  if (parts != DephasingParts::photonic) {
    const double k0c = g.mass() * constants::c_light * constants::c_light / constants::hbar;
    struct Leg {
      Apex from, to;
      Segment s;
      double sign;
    };
    const Leg legs[4] = {{Apex::A, Apex::B, Segment::AB, +1.0},
                         {Apex::B, Apex::D, Segment::BD, +1.0},
                         {Apex::A, Apex::C, Segment::AC, -1.0},
                         {Apex::C, Apex::D, Segment::CD, -1.0}};
    for (const auto& leg : legs) {
      const Vec3 u = g.reduced_velocity(leg.s);
      phi += leg.sign * 0.5 * k0c *
             simpson_h_uu(g.apex_event(leg.from), g.apex_event(leg.to), u, false);
    }
  }
  if (parts != DephasingParts::atomic) {
    if (!optics) throw std::invalid_argument("dephasing_at_launch_direct: need RamanOptics");
    const double k0c = optics->omega_phot();
    const double apex_sign[4] = {+1.0, -1.0, -1.0, +1.0};
    const Apex apexes[4] = {Apex::A, Apex::B, Apex::C, Apex::D};
    // h_33 summed mode by mode along each leg, with the leg phase assembled
    // as (apex phase time) + (exact relative offset): see mode_response
    for (int i = 0; i < 4; ++i) {
      double apex_acc = 0.0;
      for (const auto& m : re.modes) {
        const Vec3 n = m.dir.unit_vector();
        const double eta_x = g.wavefront_phase_time(apexes[i], n) + t_launch;
        const CMat3 tt = polarization_tensor(m.dir, m.helicity);
        const cdouble t33 = std::conj(tt[2][2]) * m.amplitude;
        for (const auto& leg : detail::raman_legs(*optics, n.z)) {
          if (leg.dt == 0.0) continue;
          const int mm = detail::simpson_intervals(m.omega, leg.dt, seg);
          double acc = 0.0;
          for (int kk = 0; kk <= mm; ++kk) {
            const double wgt = (kk == 0 || kk == mm) ? 1.0 : (kk % 2 ? 4.0 : 2.0);
            const double eta =
                eta_x + leg.deta_start + leg.deta_total * (static_cast<double>(kk) / mm);
            acc += wgt * 2.0 * (t33 * std::exp(cdouble(0.0, -m.omega * eta))).real();
          }
          apex_acc += leg.sign * acc * (leg.dt / (3.0 * mm));
        }
      }
      phi += apex_sign[i] * 0.5 * k0c * apex_acc;
    }
  }
  return phi;
}

// First-order bilinear-transform discretization of the Lorentzian high-pass
// -i omega / (Gamma - i omega).
inline std::vector<double> highpass_filter(const std::vector<double>& x, double gamma,
                                           double dt) {
  if (!(gamma > 0.0) || !(dt > 0.0))
    throw std::invalid_argument("highpass_filter: need Gamma > 0 and dt > 0");
  std::vector<double> y(x.size());
  if (x.empty()) return y;
  const double k = 2.0 / dt;
  const double a0 = k + gamma;
  y[0] = k * x[0] / a0;
  for (std::size_t n = 1; n < x.size(); ++n)
    y[n] = (k * (x[n] - x[n - 1]) + (k - gamma) * y[n - 1]) / a0;
  return y;
}

struct VisibilityEstimate {
  double variance = 0.0;  // rad^2
  double variance_stderr = 0.0;
  double visibility = 1.0;         // exp(-variance/2)
  double visibility_direct = 1.0;  // <cos(deltaPhi)>
  double visibility_direct_stderr = 0.0;
  int realizations = 0;
};

// Filter each realization's raw series, discard the filter warm-up, and
// estimate the variance plus both visibility estimators.  For Gaussian noise
// the direct estimator and exp(-Var/2) agree within statistics.
inline VisibilityEstimate empirical_visibility(const std::vector<std::vector<double>>& raw_series,
                                               double gamma, double dt,
                                               double burn_in_fraction = 0.25) {
  const int n = static_cast<int>(raw_series.size());
  if (n < 30)
    throw std::invalid_argument("empirical_visibility: need at least 30 realizations");
  if (!(burn_in_fraction >= 0.0) || !(burn_in_fraction < 1.0))
    throw std::invalid_argument("empirical_visibility: burn_in_fraction in [0, 1)");
  std::vector<double> vars(n), coss(n);
  for (int r = 0; r < n; ++r) {
    const auto y = highpass_filter(raw_series[r], gamma, dt);
    const std::size_t skip = static_cast<std::size_t>(burn_in_fraction * y.size());
    if (skip >= y.size()) throw std::invalid_argument("empirical_visibility: series too short");
    double v = 0.0, c = 0.0;
    for (std::size_t j = skip; j < y.size(); ++j) {
      v += y[j] * y[j];
      c += std::cos(y[j]);
    }
    const double cnt = static_cast<double>(y.size() - skip);
    vars[r] = v / cnt;
    coss[r] = c / cnt;
  }
  auto mean_stderr = [](const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= v.size();
    double s2 = 0.0;
    for (double x : v) s2 += (x - m) * (x - m);
    s2 /= (v.size() - 1);
    return std::pair<double, double>(m, std::sqrt(s2 / v.size()));
  };
  VisibilityEstimate est;
  est.realizations = n;
  std::tie(est.variance, est.variance_stderr) = mean_stderr(vars);
  std::tie(est.visibility_direct, est.visibility_direct_stderr) = mean_stderr(coss);
  est.visibility = std::exp(-0.5 * est.variance);
  return est;
}

// Analytic band integral <h12^2> = (1/pi) int_band S_h dOmega (two-sided
// collapse of the S_h convention), for the synthesis calibration check.
inline double band_mean_square_h12(const GwBackground& bg) {
  PanelOptions opts;
  opts.rel_tol = 1e-10;
  return integrate_adaptive([&](double w) { return bg(w); }, bg.band().omega_min,
                            bg.band().omega_max, 0.0, opts) /
         constants::pi;
}

struct EnsembleOptions {
  FrequencyGrid grid{};
  int n_dir = 24;
  int realizations = 200;
  LaunchGrid launches{};
  double burn_in_fraction = 0.25;
  std::uint64_t seed = 1;
  DephasingParts parts = DephasingParts::combined;
  SegmentIntegrationOptions segment{};
  double amplitude_scale = 1.0;
  std::optional<Mat3> rotate_directions;
  int calibration_samples = 16;
  unsigned jobs = 1;
};

struct EnsembleResult {
  VisibilityEstimate estimate;
  double h12_mean_square = 0.0;
  double h12_mean_square_stderr = 0.0;
};

// Parallel realization harness.  Realization r is reproducible from
// (seed, r) alone; aggregation is indexed, so the result is independent of
// the worker count.
inline EnsembleResult run_ensemble(const GwBackground& bg, const RhombGeometry& g,
                                   const RamanOptics* optics, double gamma,
                                   const EnsembleOptions& opt) {
  opt.segment.validate();
  if (opt.launches.count < 2 || !(opt.launches.dt > 0.0))
    throw std::invalid_argument("run_ensemble: launch grid must have dt > 0 and count >= 2");
  const double max_period = constants::two_pi / opt.grid.band.omega_max;
  if (opt.launches.dt > max_period / 20.0)
    throw std::invalid_argument(
        "run_ensemble: under-resolved launch step (need >= 20 samples per period of the highest "
        "synthesized frequency)");

  const int n = opt.realizations;
  std::vector<std::vector<double>> series(n);
  std::vector<double> h12ms(n, 0.0);
  parallel_for(n, opt.jobs, [&](std::size_t r) {
    FieldRealization re =
        synthesize(bg, opt.grid, opt.n_dir, derive_seed(opt.seed, r),
                   opt.rotate_directions ? &*opt.rotate_directions : nullptr);
    if (opt.amplitude_scale != 1.0) re.scale_amplitudes(opt.amplitude_scale);
    series[r] = dephasing_series(re, g, optics, opt.launches, opt.parts, opt.segment);
    // calibration samples, spread over the launch window
    const double span = opt.launches.dt * opt.launches.count;
    double acc = 0.0;
    for (int i = 0; i < opt.calibration_samples; ++i) {
      const double t = opt.launches.t0 + span * (i + 0.5) / opt.calibration_samples;
      const Mat3 h = field_at(re, t, {});
      acc += h[0][1] * h[0][1];
    }
    h12ms[r] = acc / opt.calibration_samples;
  });

  EnsembleResult out;
  out.estimate = empirical_visibility(series, gamma, opt.launches.dt, opt.burn_in_fraction);
  double m = 0.0;
  for (double v : h12ms) m += v;
  m /= n;
  double s2 = 0.0;
  for (double v : h12ms) s2 += (v - m) * (v - m);
  s2 /= (n - 1);
  out.h12_mean_square = m;
  out.h12_mean_square_stderr = std::sqrt(s2 / n);
  return out;
}

// CSV export of one realization's series: t, Phi, deltaPhi.
inline void write_series_csv(std::ostream& os, const LaunchGrid& launches,
                             const std::vector<double>& raw, const std::vector<double>& filtered) {
  os << "t_s,phi_rad,delta_phi_rad\n";
  char buf[96];
  for (std::size_t j = 0; j < raw.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", launches.t0 + j * launches.dt, raw[j],
                  j < filtered.size() ? filtered[j] : 0.0);
    os << buf;
  }
}

}  // namespace gravidec::mc
