#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gravidec/constants.hpp"

// Stochastic gravitational-wave background spectra.
//
// Convention (used everywhere in this library): S_h(omega) is the two-sided
// strain spectral density of one metric component at a fixed point, under the
// Fourier normalization
//     <h12(t) h12(0)> = int dOmega/2pi S_h(Omega) e^{-i Omega t},
// with omega an angular frequency in rad/s.  S_h is even in omega and is
// exactly zero outside the band [omega_min, omega_max].

namespace gravidec {

struct Band {
  double omega_min = 0.0;  // rad/s
  double omega_max = 0.0;  // rad/s
};

enum class SpectrumKind { flat, piecewise_power_law, tabulated };

struct PowerLawSegment {
  double omega_break;  // rad/s, segment start
  double level;        // Hz^-1, value at omega_break
  double exponent;     // S = level * (omega/omega_break)^exponent within the segment
};

class GwBackground {
 public:
  static GwBackground flat(double level, Band band) {
    validate_band(band);
    if (!(level >= 0.0) || !std::isfinite(level))
      throw std::invalid_argument("GwBackground: flat_level must be finite and >= 0");
    GwBackground bg;
    bg.kind_ = SpectrumKind::flat;
    bg.flat_level_ = level;
    bg.band_ = band;
    return bg;
  }

  static GwBackground piecewise_power_law(std::vector<PowerLawSegment> segments, Band band) {
    validate_band(band);
    if (segments.empty())
      throw std::invalid_argument("GwBackground: segments must be non-empty");
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& s = segments[i];
      if (!(s.omega_break > 0.0))
        throw std::invalid_argument("GwBackground: segment omega_break must be > 0");
      if (!(s.level >= 0.0) || !std::isfinite(s.level))
        throw std::invalid_argument("GwBackground: segment level must be finite and >= 0");
      if (i > 0 && !(segments[i - 1].omega_break < s.omega_break))
        throw std::invalid_argument("GwBackground: segment breaks must be strictly increasing");
    }
    GwBackground bg;
    bg.kind_ = SpectrumKind::piecewise_power_law;
    bg.segments_ = std::move(segments);
    bg.band_ = band;
    return bg;
  }

  // nodes: (omega rad/s, S_h Hz^-1), strictly increasing in omega, values > 0
  // (log-log interpolation).  The band must lie inside the tabulated range so
  // that no extrapolation rule is ever needed.
  static GwBackground tabulated(std::vector<std::pair<double, double>> nodes, Band band) {
    validate_band(band);
    if (nodes.size() < 2)
      throw std::invalid_argument("GwBackground: table needs at least 2 nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (!(nodes[i].first > 0.0))
        throw std::invalid_argument("GwBackground: table omega values must be > 0");
      if (!(nodes[i].second > 0.0) || !std::isfinite(nodes[i].second))
        throw std::invalid_argument("GwBackground: table S_h values must be finite and > 0");
      if (i > 0 && !(nodes[i - 1].first < nodes[i].first))
        throw std::invalid_argument("GwBackground: table must be sorted by omega, no duplicates");
    }
    if (band.omega_min < nodes.front().first || band.omega_max > nodes.back().first)
      throw std::invalid_argument("GwBackground: band must lie within the tabulated omega range");
    GwBackground bg;
    bg.kind_ = SpectrumKind::tabulated;
    bg.table_ = std::move(nodes);
    bg.band_ = band;
    return bg;
  }

  // Two-column text file: frequency_Hz  S_h_per_Hz, '#' comments and blank
  // lines ignored.  Band defaults to the tabulated range.
  static GwBackground tabulated_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("GwBackground: cannot open spectrum file: " + path);
    std::vector<std::pair<double, double>> nodes;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ss(line);
      double f_hz, sh;
      if (!(ss >> f_hz)) continue;  // blank
      if (!(ss >> sh))
        throw std::runtime_error("GwBackground: " + path + ":" + std::to_string(lineno) +
                                 ": expected two columns (frequency_Hz, S_h_per_Hz)");
      nodes.emplace_back(constants::two_pi * f_hz, sh);
    }
    if (nodes.size() < 2)
      throw std::runtime_error("GwBackground: " + path + ": needs at least 2 data rows");
    Band band{nodes.front().first, nodes.back().first};
    return tabulated(std::move(nodes), band);
  }

  // S_h(|omega|); zero outside the band.
  double operator()(double omega) const {
    const double w = std::abs(omega);
    if (!(std::isfinite(w))) throw std::invalid_argument("GwBackground: omega must be finite");
    if (w < band_.omega_min || w > band_.omega_max) return 0.0;
    switch (kind_) {
      case SpectrumKind::flat:
        return flat_level_;
      case SpectrumKind::piecewise_power_law: {
        // last segment with omega_break <= w; below the first break, the
        // first segment's law applies.
        std::size_t i = 0;
        while (i + 1 < segments_.size() && segments_[i + 1].omega_break <= w) ++i;
        const auto& s = segments_[i];
        return s.level * std::pow(w / s.omega_break, s.exponent);
      }
      case SpectrumKind::tabulated: {
        auto it = std::lower_bound(table_.begin(), table_.end(), w,
                                   [](const auto& n, double v) { return n.first < v; });
        if (it == table_.begin()) return it->second;
        if (it == table_.end()) return table_.back().second;
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        if (w == hi.first) return hi.second;
        const double t = std::log(w / lo.first) / std::log(hi.first / lo.first);
        return lo.second * std::exp(t * std::log(hi.second / lo.second));
      }
    }
    return 0.0;
  }

  SpectrumKind kind() const { return kind_; }
  const Band& band() const { return band_; }
  double flat_level() const { return flat_level_; }
  const std::vector<PowerLawSegment>& segments() const { return segments_; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }

  // Effective noise temperature: S_h = (16 G / 5 c^5) k_B T_gw.
  double effective_temperature(double omega) const {
    namespace k = constants;
    const double c5 = k::c_light * k::c_light * k::c_light * k::c_light * k::c_light;
    return 5.0 * c5 * (*this)(omega) / (16.0 * k::newton_g * k::k_boltzmann);
  }

  // Graviton occupation per mode: S_h = (16 G / 5 c^5) hbar |omega| n_gw.
  double graviton_number(double omega) const {
    if (omega == 0.0)
      throw std::domain_error("GwBackground::graviton_number: omega = 0 is divergent");
    namespace k = constants;
    return k::k_boltzmann * effective_temperature(omega) / (k::hbar * std::abs(omega));
  }

  // Noise temperature measured as a frequency: Theta = pi k_B T_gw / hbar.
  double theta_gw(double omega) const {
    namespace k = constants;
    return k::pi * k::k_boltzmann * effective_temperature(omega) / k::hbar;
  }

 private:
  static void validate_band(const Band& b) {
    if (!(b.omega_min > 0.0) || !(b.omega_max > b.omega_min))
      throw std::invalid_argument("GwBackground: band requires 0 < omega_min < omega_max");
  }

  SpectrumKind kind_ = SpectrumKind::flat;
  double flat_level_ = 0.0;
  std::vector<PowerLawSegment> segments_;
  std::vector<std::pair<double, double>> table_;
  Band band_{};
};

}  // namespace gravidec
