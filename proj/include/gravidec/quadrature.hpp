#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gravidec/constants.hpp"

// Adaptive panel integrator for spectral integrands: Gauss-Kronrod 7-15 on
// each panel, panels laid out geometrically at low frequency and capped at
// the oscillation scale of the fastest f(omega tau) argument at high
// frequency, then bisection-refined where the local error estimate is
// largest.  Deterministic: the refinement sequence and the final summation
// order do not depend on threading.

namespace gravidec {

struct QuadratureDiagnostics {
  std::size_t evaluations = 0;
  std::size_t panels = 0;
  double abs_error_estimate = 0.0;
  std::vector<std::string> warnings;
};

struct PanelOptions {
  double rel_tol = 1e-6;
  double abs_tol = 0.0;             // absolute floor on the target error
  std::size_t max_panels = 500000;  // refinement budget
  double phase_per_panel = 0.5 * constants::pi;  // max oscillation phase per panel
  double geometric_ratio = 1.25;                 // low-frequency edge ratio
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(double partial, double abs_error, std::size_t panels)
      : std::runtime_error("quadrature did not reach the requested tolerance (partial = " +
                           std::to_string(partial) + ", abs error = " +
                           std::to_string(abs_error) + ", panels = " + std::to_string(panels) +
                           ")"),
        partial_estimate(partial),
        achieved_abs_error(abs_error) {}

  double partial_estimate;
  double achieved_abs_error;
};

namespace detail {

// Gauss-Kronrod 7-15 abscissae/weights (QUADPACK dqk15 constants).
inline constexpr double gk15_x[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.000000000000000};
inline constexpr double gk15_wk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr double gk15_wg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct Panel {
  double lo, hi;
  double value;  // GK15 estimate
  double error;  // |GK15 - G7|
};

template <class F>
Panel evaluate_panel(const F& f, double lo, double hi, std::size_t& evals) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  const double fc = f(c);
  double resk = gk15_wk[7] * fc;
  double resg = gk15_wg[3] * fc;
  for (int j = 0; j < 7; ++j) {
    const double dx = h * gk15_x[j];
    const double f1 = f(c - dx);
    const double f2 = f(c + dx);
    resk += gk15_wk[j] * (f1 + f2);
    if (j % 2 == 1) resg += gk15_wg[(j - 1) / 2] * (f1 + f2);
  }
  evals += 15;
  return {lo, hi, resk * h, std::abs((resk - resg) * h)};
}

}  // namespace detail

// Integrate f over [lo, hi].  `oscillation_time` is the largest time constant
// appearing as f(omega * tau) in the integrand (0 for smooth integrands); it
// caps the initial panel width at phase_per_panel / oscillation_time.
template <class F>
double integrate_adaptive(const F& f, double lo, double hi, double oscillation_time,
                          const PanelOptions& opts = {}, QuadratureDiagnostics* diag = nullptr) {
  if (!(lo >= 0.0) || !(hi > lo))
    throw std::invalid_argument("integrate_adaptive: need 0 <= lo < hi");

  // Initial panel edges.
  std::vector<double> edges;
  edges.push_back(lo);
  const double cap_width =
      oscillation_time > 0.0 ? opts.phase_per_panel / oscillation_time : (hi - lo);
  double start = lo;
  if (lo <= 0.0) {
    start = std::min(hi, cap_width) * 1e-9;
    if (start > lo && start < hi) edges.push_back(start);
  }
  double e = start;
  while (true) {
    double next = std::min(e * opts.geometric_ratio, e + cap_width);
    if (next >= hi || next <= e) break;
    edges.push_back(next);
    e = next;
  }
  edges.push_back(hi);
  // Guard: a pathologically large uniform region is refined rather than
  // enumerated up front.
  const std::size_t max_initial = opts.max_panels / 2 + 1;
  if (edges.size() > max_initial) {
    std::vector<double> thinned;
    const std::size_t stride = (edges.size() + max_initial - 1) / max_initial;
    for (std::size_t i = 0; i < edges.size(); i += stride) thinned.push_back(edges[i]);
    if (thinned.back() != hi) thinned.push_back(hi);
    edges.swap(thinned);
    if (diag) diag->warnings.push_back("initial panel grid thinned to fit the panel budget");
  }

  std::size_t evals = 0;
  std::vector<detail::Panel> panels;
  panels.reserve(edges.size());
  for (std::size_t i = 0; i + 1 < edges.size(); ++i)
    panels.push_back(detail::evaluate_panel(f, edges[i], edges[i + 1], evals));

  auto totals = [&panels]() {
    double v = 0.0, err = 0.0, comp = 0.0;
    for (const auto& p : panels) {
      double y = p.value - comp;
      double t = v + y;
      comp = (t - v) - y;
      v = t;
      err += p.error;
    }
    return std::pair<double, double>(v, err);
  };

  auto [total, err_total] = totals();
  std::size_t since_resum = 0;
  while (err_total > std::max(opts.rel_tol * std::abs(total), opts.abs_tol)) {
    if (panels.size() >= opts.max_panels) {
      if (diag) {
        diag->evaluations += evals;
        diag->panels += panels.size();
        diag->abs_error_estimate += err_total;
      }
      throw NonConvergenceError(total, err_total, panels.size());
    }
    // Split the worst panel (deterministic: first max on ties).
    std::size_t worst = 0;
    for (std::size_t i = 1; i < panels.size(); ++i)
      if (panels[i].error > panels[worst].error) worst = i;
    if (panels[worst].error == 0.0) break;  // nothing left to gain
    const detail::Panel old = panels[worst];
    const double mid = 0.5 * (old.lo + old.hi);
    if (mid <= old.lo || mid >= old.hi) break;  // width at rounding limit
    panels[worst] = detail::evaluate_panel(f, old.lo, mid, evals);
    panels.push_back(detail::evaluate_panel(f, mid, old.hi, evals));
    // incremental update, with a periodic full re-sum to cap drift
    total += panels[worst].value + panels.back().value - old.value;
    err_total += panels[worst].error + panels.back().error - old.error;
    if (++since_resum >= 64) {
      std::tie(total, err_total) = totals();
      since_resum = 0;
    }
  }

  // Final deterministic summation in ascending order.
  std::sort(panels.begin(), panels.end(),
            [](const detail::Panel& a, const detail::Panel& b) { return a.lo < b.lo; });
  std::tie(total, err_total) = totals();
  if (diag) {
    diag->evaluations += evals;
    diag->panels += panels.size();
    diag->abs_error_estimate += err_total;
  }
  return total;
}

}  // namespace gravidec
