#pragma once

#include <bit>
#include <complex>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gravidec/constants.hpp"
#include "gravidec/geometry.hpp"
#include "gravidec/kinematics.hpp"
#include "gravidec/linalg.hpp"

// Mode-by-mode dephasing amplitudes and the apparatus response functions
// A_at(omega), A_phot(omega).  The response maps a strain spectrum to a
// dephasing spectrum, S_Phi = S_h * A, where
//     A(omega) = (5/2) sum_gamma < |phi_k^gamma|^2 >_n .

namespace gravidec {

// f(x) = 2(1 - cos x) = 4 sin^2(x/2); the sin^2 form keeps small-x accuracy.
inline double f_osc(double x) {
  const double s = std::sin(0.5 * x);
  return 4.0 * s * s;
}

struct GwProbeMode {
  double omega = 0.0;  // rad/s, > 0
  Direction dir{};
  int helicity = 1;
};

namespace detail {

constexpr cdouble iu{0.0, 1.0};

// (1 - e^{i a b}) / b, series-expanded around small a*b to avoid the 0/0
// cancellation at the colinear limits (b -> 0).
inline cdouble one_minus_exp_over(double a, double b) {
  const double u = a * b;
  if (std::abs(u) < 1e-4) {
    // -i a (1 + i u/2 - u^2/6 - i u^3/24) + O(a u^4)
    return -iu * a * (cdouble(1.0, 0.0) + iu * (0.5 * u) - cdouble(u * u / 6.0, 0.0) -
                      iu * (u * u * u / 24.0));
  }
  return (1.0 - std::exp(iu * u)) / b;
}

// W(z) = (1 - e^{-i z})/(i z), W(0) = 1.
inline cdouble phase_window(double z) {
  if (std::abs(z) < 1e-4)
    return cdouble(1.0 - z * z / 6.0, -0.5 * z + z * z * z / 24.0);
  return (1.0 - std::exp(-iu * z)) / (iu * z);
}

}  // namespace detail

enum class SpatialPhase { keep, drop };

// Dephasing amplitude of one straight worldline segment for one mode:
//     phi = (K0/(2 sqrt 2)) (e*.u)^2 int e^{-i k_mu x^mu(t')} c dt'
// with constant reduced velocity u; the phase is linear in t', so the line
// integral is analytic.  With SpatialPhase::drop the k.x term is omitted
// (slow-probe limit).
inline cdouble segment_amplitude(const SpacetimeEvent& start, const SpacetimeEvent& end,
                                 const Vec3& u, double k0, const GwProbeMode& mode,
                                 SpatialPhase sp = SpatialPhase::keep) {
  if (!(k0 > 0.0)) throw std::invalid_argument("segment_amplitude: K0 must be > 0");
  const double dt = end.t - start.t;
  if (dt == 0.0) return {};
  const CVec3 ec = polarization_vector(mode.dir, mode.helicity).conj();
  const cdouble eu = ec.dot(u);
  if (eu == cdouble{}) return {};
  const Vec3 n = mode.dir.unit_vector();
  double phase0 = mode.omega * start.t;
  double rate = mode.omega;
  if (sp == SpatialPhase::keep) {
    phase0 -= (mode.omega / constants::c_light) * n.dot(start.x);
    rate -= (mode.omega / constants::c_light) * n.dot(end.x - start.x) / dt;
  }
  const cdouble integral =
      std::exp(-detail::iu * phase0) * dt * detail::phase_window(rate * dt);
  return (k0 * constants::c_light / (2.0 * std::sqrt(2.0))) * eu * eu * integral;
}

// Closed-form atomic amplitude (slow-probe limit, spatial phase dropped):
//     phi = 2 i sqrt(2) (Omega_at sin(2 alpha)/omega) e1 e3 (1 - cos(omega tau))
// with the opposite-helicity polarization components (e* = e^{-gamma}).
inline cdouble atomic_amplitude(const RhombGeometry& g, const GwProbeMode& mode) {
  if (!(mode.omega > 0.0)) throw std::invalid_argument("atomic_amplitude: omega must be > 0");
  const CVec3 em = polarization_vector(mode.dir, -mode.helicity);
  const cdouble e13 = em.x * em.z;
  const double amp = 2.0 * std::sqrt(2.0) * g.omega_atomic() * g.sin_two_alpha() / mode.omega;
  return detail::iu * amp * e13 * (0.5 * f_osc(mode.omega * g.tau_ab()));
}

// A_at(omega) = 4 (Omega_at^2 sin^2(2 alpha)/omega^2) f^2(omega tau_ab);
// the omega -> 0 limit is 0 (A_at ~ omega^2 tau^4 near zero).
inline double atomic_response(const RhombGeometry& g, double omega) {
  const double w = std::abs(omega);
  if (w == 0.0) return 0.0;
  const double s = g.omega_atomic() * g.sin_two_alpha() / w;
  const double f = f_osc(w * g.tau_ab());
  return 4.0 * s * s * f * f;
}

// Beam-splitter amplitude factor psi_k(omega, theta), finite for all theta
// including the colinear limits beta_{+-} = 1 +- cos(theta) -> 0.
inline cdouble psi_small(const RamanOptics& o, double omega, double theta) {
  if (!(omega > 0.0)) throw std::invalid_argument("psi_small: omega must be > 0");
  const double c = std::cos(theta);
  const double bp = 1.0 + c, bm = 1.0 - c;
  const cdouble mirror_phase = std::exp(detail::iu * (omega * o.tau_mb() * bp));
  const cdouble term1 = mirror_phase * detail::one_minus_exp_over(omega * o.tau_lm(), bm);
  const cdouble term2 = detail::one_minus_exp_over(omega * o.tau_mb(), bp);
  const cdouble term3 = detail::one_minus_exp_over(omega * (o.tau_lm() - o.tau_mb()), bm);
  return bp * bm * (term1 + term2 - term3);
}

// |psi_k|^2 through the f-sum closed form (independent algebraic route).
inline double psi_small_squared(const RamanOptics& o, double omega, double theta) {
  const double c = std::cos(theta);
  const double bp = 1.0 + c, bm = 1.0 - c;
  const double tlm = o.tau_lm(), tmb = o.tau_mb();
  const double c1 = bp * (bp - bm);
  double v = c1 * (f_osc(omega * (tlm - tmb) * bm) + f_osc(omega * tlm * bm) +
                   f_osc(omega * tmb * bp) - f_osc(omega * ((tlm - tmb) * bm - tmb * bp)) -
                   f_osc(omega * (tlm * bm + tmb * bp)));
  v += bp * bp * f_osc(omega * tmb * (bp + bm));
  v += bm * (bm - bp) * f_osc(omega * tmb * bp);
  return v;
}

// Recombination factor Psi_k = e^{-i w eta_A} - e^{-i w eta_B} - e^{-i w eta_C}
// + e^{-i w eta_D} built from the wavefront phase times of the four apexes.
inline cdouble psi_big(const RhombGeometry& g, double omega, const Direction& d) {
  if (!(omega > 0.0)) throw std::invalid_argument("psi_big: omega must be > 0");
  const Vec3 n = d.unit_vector();
  auto ph = [&](Apex a) { return std::exp(-detail::iu * (omega * g.wavefront_phase_time(a, n))); };
  return ph(Apex::A) - ph(Apex::B) - ph(Apex::C) + ph(Apex::D);
}

// |Psi_k|^2 through the closed form.  With eta_ab = eta_B - eta_A and
// eta_ac = eta_C - eta_A the six pair differences collapse (via the product
// rule f(x) f(y) = 2f(x) + 2f(y) - f(x+y) - f(x-y)) to
//     |Psi|^2 = f(w eta_ab) f(w eta_ac),
// which, unlike the six-term sum, does not cancel at small w eta.
inline double psi_big_squared(const RhombGeometry& g, double omega, const Direction& d) {
  const Vec3 n = d.unit_vector();
  const double eta_a = g.wavefront_phase_time(Apex::A, n);
  const double eta_ab = g.wavefront_phase_time(Apex::B, n) - eta_a;
  const double eta_ac = g.wavefront_phase_time(Apex::C, n) - eta_a;
  return f_osc(omega * eta_ab) * f_osc(omega * eta_ac);
}

// Photonic amplitude phi_k^gamma = (i Omega_phot/(2 sqrt 2 omega)) psi_k Psi_k
// (identical for both helicities: the polarization factor reduces to
// sin^2(theta) for beams along x3).
inline cdouble photonic_amplitude(const RhombGeometry& g, const RamanOptics& o,
                                  const GwProbeMode& mode) {
  const cdouble psi = psi_small(o, mode.omega, mode.dir.theta);
  const cdouble big = psi_big(g, mode.omega, mode.dir);
  return detail::iu * (o.omega_phot() / (2.0 * std::sqrt(2.0) * mode.omega)) * psi * big;
}

// A_phot(omega) = (Omega_phot^2 / 4 omega^2) (5/2) < |psi|^2 |Psi|^2 >_n.
// Both helicities contribute equally; the doubling is folded into the 1/4.
//
// On a product rule the average exploits the separable structure: |psi|^2
// depends on theta only, and with a = tau_ab (1 - cos(alpha) sin(theta)
// cos(phi)) and b = tau_ab sin(alpha) cos(theta) the recombination factor is
// |Psi|^2 = f(w (a - b)) f(w (a + b)), two sine evaluations per node.
inline double photonic_response(const RhombGeometry& g, const RamanOptics& o, double omega,
                                const AngularQuadrature& q, unsigned jobs = 1) {
  const double w = std::abs(omega);
  if (w == 0.0) return 0.0;
  double mean;
  if (const auto* grid = q.product_grid()) {
    const double tau = g.tau_ab();
    const double sa = std::sin(g.alpha()), ca = std::cos(g.alpha());
    const int n_phi = grid->n_phi;
    std::vector<double> cos_phi(n_phi);
    for (int j = 0; j < n_phi; ++j) cos_phi[j] = std::cos(constants::two_pi * j / n_phi);
    mean = parallel_sum(grid->cos_theta.size(), 8, jobs, [&](std::size_t i) {
      const double u = grid->cos_theta[i];
      const double st = std::sqrt(std::max(0.0, 1.0 - u * u));
      const double psi2 = psi_small_squared(o, w, std::acos(u));
      const double wb = w * tau * sa * u;
      const double xcoef = ca * st * tau;
      double row = 0.0;
      for (int j = 0; j < n_phi; ++j) {
        const double wa = w * (tau - xcoef * cos_phi[j]);
        const double s1 = std::sin(0.5 * (wa - wb));
        const double s2 = std::sin(0.5 * (wa + wb));
        row += 16.0 * (s1 * s1) * (s2 * s2);
      }
      return grid->theta_weight[i] * psi2 * row / n_phi;
    });
  } else {
    mean = q.average(
        [&](const Direction& d) {
          return psi_small_squared(o, w, d.theta) * psi_big_squared(g, w, d);
        },
        jobs);
  }
  const double pref = o.omega_phot() / (2.0 * w);
  return pref * pref * 2.5 * mean;
}

struct PhotonicCheck {
  double value = 0.0;          // at the requested rule
  double refined_value = 0.0;  // at the node-doubled rule
  double rel_change = 0.0;
  bool under_resolved = false;  // rel_change > 1e-6
};

// Node-doubling resolution check for the photonic quadrature.
inline PhotonicCheck photonic_response_checked(const RhombGeometry& g, const RamanOptics& o,
                                               double omega, int n_theta, int n_phi,
                                               unsigned jobs = 1) {
  const auto q1 = AngularQuadrature::gauss_legendre(n_theta, n_phi);
  const auto q2 = AngularQuadrature::gauss_legendre(2 * n_theta, 2 * n_phi);
  PhotonicCheck c;
  c.value = photonic_response(g, o, omega, q1, jobs);
  c.refined_value = photonic_response(g, o, omega, q2, jobs);
  const double scale = std::max(std::abs(c.refined_value), 1e-300);
  c.rel_change = std::abs(c.value - c.refined_value) / scale;
  c.under_resolved = c.rel_change > 1e-6;
  return c;
}

// Exact combined response including the atomic/photonic interference term:
// (5/2) sum_gamma < |phi_at + phi_phot|^2 >_n.
inline double combined_response_exact(const RhombGeometry& g, const RamanOptics& o, double omega,
                                      const AngularQuadrature& q, unsigned jobs = 1) {
  const double w = std::abs(omega);
  if (w == 0.0) return 0.0;
  const double mean = q.average(
      [&](const Direction& d) {
        double s = 0.0;
        for (int hel : {+1, -1}) {
          GwProbeMode m{w, d, hel};
          s += std::norm(atomic_amplitude(g, m) + photonic_amplitude(g, o, m));
        }
        return s;
      },
      jobs);
  return 2.5 * mean;
}

// Default combined response: A_at + A_phot with the cross term dropped (the
// correlation between atomic and photonic dephasings is negligible for slow
// atoms; the exact mode above keeps it).
inline double combined_response(const RhombGeometry& g, const RamanOptics& o, double omega,
                                const AngularQuadrature& q, unsigned jobs = 1) {
  return atomic_response(g, omega) + photonic_response(g, o, omega, q, jobs);
}

// A response function packaged with the metadata the spectral integrator
// needs: the largest time constant (fastest oscillation in omega), the
// smallest one (extent of the support in omega), and the asymptotic mean
// level M = lim mean(A(omega) omega^2) for analytic tail handling.
class ApparatusResponse {
 public:
  enum class Kind { atomic, photonic, combined_sum, combined_exact, custom };

  static ApparatusResponse atomic(const RhombGeometry& g) {
    const double os = g.omega_atomic() * g.sin_two_alpha();
    return ApparatusResponse(Kind::atomic,
                             [g](double w) { return atomic_response(g, w); },
                             2.0 * g.tau_ab(), g.tau_ab(), 24.0 * os * os);
  }

  static ApparatusResponse photonic(const RhombGeometry& g, const RamanOptics& o,
                                    AngularQuadrature q, unsigned jobs = 1) {
    auto qp = std::make_shared<AngularQuadrature>(std::move(q));
    const double op = o.omega_phot();
    return ApparatusResponse(
        Kind::photonic,
        [g, o, qp, jobs](double w) { return photonic_response(g, o, w, *qp, jobs); },
        4.0 * (g.tau_ab() + o.tau_lm() + o.tau_mb()), o.tau_mb(), (40.0 / 3.0) * op * op);
  }

  static ApparatusResponse combined_sum(const RhombGeometry& g, const RamanOptics& o,
                                        AngularQuadrature q, unsigned jobs = 1) {
    ApparatusResponse at = atomic(g);
    ApparatusResponse ph = photonic(g, o, std::move(q), jobs);
    ApparatusResponse r(Kind::combined_sum,
                        [at, ph](double w) { return at(w) + ph(w); },
                        std::max(at.oscillation_time(), ph.oscillation_time()),
                        std::min(at.support_time(), ph.support_time()),
                        at.asymptotic_level() + ph.asymptotic_level());
    r.atomic_part_ = std::make_shared<ApparatusResponse>(std::move(at));
    r.photonic_part_ = std::make_shared<ApparatusResponse>(std::move(ph));
    return r;
  }

  static ApparatusResponse combined_exact(const RhombGeometry& g, const RamanOptics& o,
                                          AngularQuadrature q, unsigned jobs = 1) {
    auto qp = std::make_shared<AngularQuadrature>(std::move(q));
    ApparatusResponse at = atomic(g);
    ApparatusResponse ph = photonic(g, o, *qp, jobs);
    ApparatusResponse r(
        Kind::combined_exact,
        [g, o, qp, jobs](double w) { return combined_response_exact(g, o, w, *qp, jobs); },
        std::max(at.oscillation_time(), ph.oscillation_time()),
        std::min(at.support_time(), ph.support_time()),
        at.asymptotic_level() + ph.asymptotic_level());
    r.atomic_part_ = std::make_shared<ApparatusResponse>(std::move(at));
    r.photonic_part_ = std::make_shared<ApparatusResponse>(std::move(ph));
    return r;
  }

  static ApparatusResponse custom(std::function<double(double)> eval, double oscillation_time,
                                  double support_time, double asymptotic_level) {
    return ApparatusResponse(Kind::custom, std::move(eval), oscillation_time, support_time,
                             asymptotic_level);
  }

  // A(|omega|); memoized per omega-bits when enabled.
  double operator()(double omega) const {
    const double w = std::abs(omega);
    if (!memo_) return eval_(w);
    const std::uint64_t key = std::bit_cast<std::uint64_t>(w);
    {
      std::lock_guard<std::mutex> lk(memo_->mutex);
      auto it = memo_->values.find(key);
      if (it != memo_->values.end()) return it->second;
    }
    const double v = eval_(w);
    std::lock_guard<std::mutex> lk(memo_->mutex);
    memo_->values.emplace(key, v);
    return v;
  }

  Kind kind() const { return kind_; }
  double oscillation_time() const { return oscillation_time_; }
  double support_time() const { return support_time_; }
  double asymptotic_level() const { return asymptotic_level_; }

  const ApparatusResponse* atomic_part() const { return atomic_part_.get(); }
  const ApparatusResponse* photonic_part() const { return photonic_part_.get(); }

  void enable_memoization(bool on = true) {
    memo_ = on ? std::make_shared<Memo>() : nullptr;
  }

 private:
  struct Memo {
    std::mutex mutex;
    std::unordered_map<std::uint64_t, double> values;
  };

  ApparatusResponse(Kind k, std::function<double(double)> eval, double osc, double support,
                    double asym)
      : kind_(k),
        eval_(std::move(eval)),
        oscillation_time_(osc),
        support_time_(support),
        asymptotic_level_(asym) {}

  Kind kind_;
  std::function<double(double)> eval_;
  double oscillation_time_;
  double support_time_;
  double asymptotic_level_;
  std::shared_ptr<ApparatusResponse> atomic_part_, photonic_part_;
  std::shared_ptr<Memo> memo_;
};

}  // namespace gravidec
