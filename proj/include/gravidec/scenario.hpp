#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "gravidec/background.hpp"
#include "gravidec/constants.hpp"
#include "gravidec/decoherence.hpp"
#include "gravidec/geometry.hpp"
#include "gravidec/mc_oracle.hpp"
#include "gravidec/parallel.hpp"
#include "gravidec/presets.hpp"
#include "gravidec/response.hpp"

// Scenario runner: line-oriented `[section]` / `key = value` configs,
// single evaluations or parameter sweeps, CSV reports.
//
// Config units: frequencies in Hz, times in s, angles in rad, masses in kg,
// S_h in Hz^-1.  Everything is converted to angular frequencies (rad/s)
// internally.

namespace gravidec {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& msg)
      : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + msg : msg),
        line_number(line) {}
  int line_number;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class RunMode { closed_form, spectral, monte_carlo, all };

struct BackgroundSpec {
  SpectrumKind kind = SpectrumKind::flat;
  double flat_level = 0.0;                                  // Hz^-1
  double band_min_hz = 1e-6, band_max_hz = 1e-4;            // Hz
  std::string table_path;                                   // kind = table
  std::vector<std::array<double, 3>> segments;              // (f_hz, level, exponent)

  GwBackground build() const {
    const Band band{constants::two_pi * band_min_hz, constants::two_pi * band_max_hz};
    switch (kind) {
      case SpectrumKind::flat:
        return GwBackground::flat(flat_level, band);
      case SpectrumKind::piecewise_power_law: {
        std::vector<PowerLawSegment> segs;
        for (const auto& s : segments)
          segs.push_back({constants::two_pi * s[0], s[1], s[2]});
        return GwBackground::piecewise_power_law(std::move(segs), band);
      }
      case SpectrumKind::tabulated:
        return GwBackground::tabulated_from_file(table_path);
    }
    throw ConfigError(0, "unreachable background kind");
  }
};

struct GeometrySpec {
  std::string preset;  // informational once expanded
  double alpha_rad = 0.0;
  double v_at = 0.0;
  double tau_ab = 0.0;
  double mass = 0.0;

  RhombGeometry build() const { return RhombGeometry::make(alpha_rad, v_at, tau_ab, mass); }
};

struct OpticsSpec {
  bool present = false;
  double laser_freq_hz = 0.0;  // Omega_phot = 2 pi laser_freq_hz
  double tau_mb = 0.0;
  double tau_lm = 0.0;

  RamanOptics build(double mass) const {
    return RamanOptics::make(constants::two_pi * laser_freq_hz, tau_mb, tau_lm, mass);
  }
};

struct FilterSpec {
  double tau_av = 0.0;  // s
};

struct SweepSpec {
  bool present = false;
  std::string parameter;
  double from = 0.0, to = 0.0;
  int count = 0;
  bool log_scale = true;
};

struct McSpec {
  int n_omega = 48;
  int n_dir = 24;
  int realizations = 200;
  int launches = 4800;
  double launch_dt = 0.0;  // 0 = auto
  double burn_in = 0.25;
  bool export_series = false;
};

struct QuadratureSpec {
  int n_theta = 64;
  int n_phi = 128;
};

struct IntegratorSpec {
  double cutoff_factor = 1000.0;
  double phase_per_panel = 0.5 * constants::pi;
  long max_panels = 500000;
};

struct ScenarioConfig {
  BackgroundSpec background;
  GeometrySpec geometry;
  OpticsSpec optics;
  FilterSpec filter;
  RunMode mode = RunMode::closed_form;
  std::optional<std::uint64_t> seed;
  double tol = 1e-6;
  unsigned jobs = 0;  // 0 = auto
  SweepSpec sweep;
  McSpec mc;
  QuadratureSpec quadrature;
  IntegratorSpec integrator;
  std::string out_dir = ".";

  bool operator==(const ScenarioConfig& o) const {
    auto seg_eq = [&] {
      if (background.segments.size() != o.background.segments.size()) return false;
      for (std::size_t i = 0; i < background.segments.size(); ++i)
        if (background.segments[i] != o.background.segments[i]) return false;
      return true;
    };
    return background.kind == o.background.kind &&
           background.flat_level == o.background.flat_level &&
           background.band_min_hz == o.background.band_min_hz &&
           background.band_max_hz == o.background.band_max_hz &&
           background.table_path == o.background.table_path && seg_eq() &&
           geometry.alpha_rad == o.geometry.alpha_rad && geometry.v_at == o.geometry.v_at &&
           geometry.tau_ab == o.geometry.tau_ab && geometry.mass == o.geometry.mass &&
           optics.present == o.optics.present && optics.laser_freq_hz == o.optics.laser_freq_hz &&
           optics.tau_mb == o.optics.tau_mb && optics.tau_lm == o.optics.tau_lm &&
           filter.tau_av == o.filter.tau_av && mode == o.mode && seed == o.seed && tol == o.tol &&
           jobs == o.jobs && sweep.present == o.sweep.present &&
           sweep.parameter == o.sweep.parameter && sweep.from == o.sweep.from &&
           sweep.to == o.sweep.to && sweep.count == o.sweep.count &&
           sweep.log_scale == o.sweep.log_scale && mc.n_omega == o.mc.n_omega &&
           mc.n_dir == o.mc.n_dir && mc.realizations == o.mc.realizations &&
           mc.launches == o.mc.launches && mc.launch_dt == o.mc.launch_dt &&
           mc.burn_in == o.mc.burn_in && mc.export_series == o.mc.export_series &&
           quadrature.n_theta == o.quadrature.n_theta && quadrature.n_phi == o.quadrature.n_phi &&
           integrator.cutoff_factor == o.integrator.cutoff_factor &&
           integrator.phase_per_panel == o.integrator.phase_per_panel &&
           integrator.max_panels == o.integrator.max_panels && out_dir == o.out_dir;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError(line, "expected a number, got '" + v + "'");
  }
}

inline long parse_int(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const long d = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return d;
  } catch (...) {
    throw ConfigError(line, "expected an integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "on" || v == "1") return true;
  if (v == "false" || v == "off" || v == "0") return false;
  throw ConfigError(line, "expected a boolean, got '" + v + "'");
}

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parsing

inline ScenarioConfig parse_config(const std::string& text) {
  ScenarioConfig cfg;
  std::istringstream in(text);
  std::string raw;
  int lineno = 0;
  std::string section;

  bool have_background = false, have_geometry = false, have_filter = false;
  bool optics_section_seen = false;
  bool explicit_alpha = false, explicit_sin2a = false;
  bool background_kind_set = false, background_flat_set = false;
  double sin_two_alpha = 0.0;
  std::map<std::string, int> seen_line;  // section.key -> line (for late validation)

  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(lineno, "unterminated section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      static const char* known[] = {"background", "geometry",   "optics", "filter",
                                    "run",        "sweep",      "mc",     "quadrature",
                                    "integrator", "output"};
      if (std::find_if(std::begin(known), std::end(known),
                       [&](const char* k) { return section == k; }) == std::end(known))
        throw ConfigError(lineno, "unknown section [" + section + "]");
      if (seen_line.count("[" + section + "]"))
        throw ConfigError(lineno, "duplicate section [" + section + "]");
      seen_line["[" + section + "]"] = lineno;
      if (section == "background") have_background = true;
      if (section == "geometry") have_geometry = true;
      if (section == "filter") have_filter = true;
      if (section == "optics") {
        cfg.optics.present = true;
        optics_section_seen = true;
      }
      if (section == "sweep") cfg.sweep.present = true;
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(lineno, "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(lineno, "missing key before '='");
    if (val.empty()) throw ConfigError(lineno, "missing value for key '" + key + "'");
    if (section.empty()) throw ConfigError(lineno, "key '" + key + "' outside any [section]");
    seen_line[section + "." + key] = lineno;

    if (section == "background") {
      if (key == "kind") {
        background_kind_set = true;
        if (val == "flat")
          cfg.background.kind = SpectrumKind::flat;
        else if (val == "power_law")
          cfg.background.kind = SpectrumKind::piecewise_power_law;
        else if (val == "table")
          cfg.background.kind = SpectrumKind::tabulated;
        else
          throw ConfigError(lineno, "unknown background kind '" + val + "'");
      } else if (key == "flat") {
        cfg.background.flat_level = detail::parse_double(val, lineno);
        background_flat_set = true;
      } else if (key == "band_min_hz")
        cfg.background.band_min_hz = detail::parse_double(val, lineno);
      else if (key == "band_max_hz")
        cfg.background.band_max_hz = detail::parse_double(val, lineno);
      else if (key == "table")
        cfg.background.table_path = val;
      else if (key == "segments") {
        std::istringstream segs(val);
        std::string item;
        while (std::getline(segs, item, ',')) {
          item = detail::trim(item);
          if (item.empty()) continue;
          std::array<double, 3> s{};
          std::istringstream fs(item);
          std::string part;
          for (int i = 0; i < 3; ++i) {
            if (!std::getline(fs, part, ':'))
              throw ConfigError(lineno, "segment needs f_hz:level:exponent");
            s[i] = detail::parse_double(detail::trim(part), lineno);
          }
          cfg.background.segments.push_back(s);
        }
      } else
        throw ConfigError(lineno, "unknown key '" + key + "' in [background]");
    } else if (section == "geometry") {
      if (key == "preset") {
        if (val != "hyper-cs") throw ConfigError(lineno, "unknown geometry preset '" + val + "'");
        cfg.geometry.preset = val;
      } else if (key == "alpha_rad") {
        cfg.geometry.alpha_rad = detail::parse_double(val, lineno);
        explicit_alpha = true;
      } else if (key == "sin_two_alpha") {
        sin_two_alpha = detail::parse_double(val, lineno);
        explicit_sin2a = true;
      } else if (key == "v_at")
        cfg.geometry.v_at = detail::parse_double(val, lineno);
      else if (key == "tau_ab")
        cfg.geometry.tau_ab = detail::parse_double(val, lineno);
      else if (key == "mass")
        cfg.geometry.mass = detail::parse_double(val, lineno);
      else
        throw ConfigError(lineno, "unknown key '" + key + "' in [geometry]");
    } else if (section == "optics") {
      if (key == "enabled")
        cfg.optics.present = detail::parse_bool(val, lineno);
      else if (key == "laser_freq_hz")
        cfg.optics.laser_freq_hz = detail::parse_double(val, lineno);
      else if (key == "tau_mb")
        cfg.optics.tau_mb = detail::parse_double(val, lineno);
      else if (key == "tau_lm")
        cfg.optics.tau_lm = detail::parse_double(val, lineno);
      else
        throw ConfigError(lineno, "unknown key '" + key + "' in [optics]");
    } else if (section == "filter") {
      if (key == "tau_av")
        cfg.filter.tau_av = detail::parse_double(val, lineno);
      else
        throw ConfigError(lineno, "unknown key '" + key + "' in [filter]");
    } else if (section == "run") {
      if (key == "mode") {
        if (val == "closed_form")
          cfg.mode = RunMode::closed_form;
        else if (val == "spectral")
          cfg.mode = RunMode::spectral;
        else if (val == "monte_carlo")
          cfg.mode = RunMode::monte_carlo;
        else if (val == "all")
          cfg.mode = RunMode::all;
        else
          throw ConfigError(lineno, "unknown run mode '" + val + "'");
      } else if (key == "seed")
        cfg.seed = static_cast<std::uint64_t>(detail::parse_int(val, lineno));
      else if (key == "tol")
        cfg.tol = detail::parse_double(val, lineno);
      else if (key == "jobs")
        cfg.jobs = static_cast<unsigned>(detail::parse_int(val, lineno));
      else
        throw ConfigError(lineno, "unknown key '" + key + "' in [run]");
    } else if (section == "sweep") {
      if (key == "parameter")
        cfg.sweep.parameter = val;
      else if (key == "from")
        cfg.sweep.from = detail::parse_double(val, lineno);
      else if (key == "to")
        cfg.sweep.to = detail::parse_double(val, lineno);
      else if (key == "count")
        cfg.sweep.count = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "scale") {
        if (val == "log")
          cfg.sweep.log_scale = true;
        else if (val == "linear")
          cfg.sweep.log_scale = false;
        else
          throw ConfigError(lineno, "sweep scale must be 'log' or 'linear'");
      } else
        throw ConfigError(lineno, "unknown key '" + key + "' in [sweep]");
    } else if (section == "mc") {
      if (key == "n_omega")
        cfg.mc.n_omega = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "n_dir")
        cfg.mc.n_dir = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "realizations")
        cfg.mc.realizations = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "launches")
        cfg.mc.launches = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "launch_dt")
        cfg.mc.launch_dt = detail::parse_double(val, lineno);
      else if (key == "burn_in")
        cfg.mc.burn_in = detail::parse_double(val, lineno);
      else if (key == "export_series")
        cfg.mc.export_series = detail::parse_bool(val, lineno);
      else
        throw ConfigError(lineno, "unknown key '" + key + "' in [mc]");
    } else if (section == "integrator") {
      if (key == "cutoff_factor")
        cfg.integrator.cutoff_factor = detail::parse_double(val, lineno);
      else if (key == "phase_per_panel")
        cfg.integrator.phase_per_panel = detail::parse_double(val, lineno);
      else if (key == "max_panels")
        cfg.integrator.max_panels = detail::parse_int(val, lineno);
      else
        throw ConfigError(lineno, "unknown key '" + key + "' in [integrator]");
    } else if (section == "quadrature") {
      if (key == "n_theta")
        cfg.quadrature.n_theta = static_cast<int>(detail::parse_int(val, lineno));
      else if (key == "n_phi")
        cfg.quadrature.n_phi = static_cast<int>(detail::parse_int(val, lineno));
      else
        throw ConfigError(lineno, "unknown key '" + key + "' in [quadrature]");
    } else if (section == "output") {
      if (key == "dir")
        cfg.out_dir = val;
      else
        throw ConfigError(lineno, "unknown key '" + key + "' in [output]");
    }
  }

  // -- validation / preset expansion ---------------------------------------
  if (!have_background) throw ConfigError(0, "missing required section [background]");
  if (!have_geometry) throw ConfigError(0, "missing required section [geometry]");
  if (!have_filter) throw ConfigError(0, "missing required section [filter]");

  if (!background_kind_set && background_flat_set) cfg.background.kind = SpectrumKind::flat;
  if (cfg.background.kind == SpectrumKind::flat && !background_flat_set)
    throw ConfigError(0, "[background] flat level missing (key 'flat')");
  if (cfg.background.kind == SpectrumKind::tabulated && cfg.background.table_path.empty())
    throw ConfigError(0, "[background] kind = table requires key 'table'");
  if (cfg.background.kind == SpectrumKind::piecewise_power_law && cfg.background.segments.empty())
    throw ConfigError(0, "[background] kind = power_law requires key 'segments'");

  if (cfg.geometry.preset == "hyper-cs") {
    const RhombGeometry g = presets::hyper_cs_rhomb();
    if (!explicit_alpha && !explicit_sin2a) cfg.geometry.alpha_rad = g.alpha();
    if (cfg.geometry.v_at == 0.0) cfg.geometry.v_at = g.v_atom();
    if (cfg.geometry.tau_ab == 0.0) cfg.geometry.tau_ab = g.tau_ab();
    if (cfg.geometry.mass == 0.0) cfg.geometry.mass = g.mass();
    // the preset supplies the Raman optics unless the config spoke for
    // itself (an [optics] section, including an explicit enabled = false)
    if (!optics_section_seen) {
      const RamanOptics o = presets::hyper_cs_optics();
      cfg.optics.present = true;
      cfg.optics.laser_freq_hz = o.omega_phot() / constants::two_pi;
      cfg.optics.tau_mb = o.tau_mb();
      cfg.optics.tau_lm = o.tau_lm();
    }
  }
  if (explicit_sin2a) {
    if (explicit_alpha) throw ConfigError(0, "[geometry] give either alpha_rad or sin_two_alpha");
    if (!(sin_two_alpha > 0.0) || !(sin_two_alpha < 1.0))
      throw ConfigError(0, "[geometry] sin_two_alpha out of range (0, 1)");
    cfg.geometry.alpha_rad = 0.5 * std::asin(sin_two_alpha);
  }
  if (cfg.geometry.alpha_rad == 0.0 || cfg.geometry.v_at == 0.0 || cfg.geometry.tau_ab == 0.0 ||
      cfg.geometry.mass == 0.0)
    throw ConfigError(0, "[geometry] incomplete: need preset or alpha_rad/sin_two_alpha, v_at, "
                         "tau_ab, mass");
  if (cfg.optics.present &&
      (cfg.optics.laser_freq_hz <= 0.0 || cfg.optics.tau_mb <= 0.0 || cfg.optics.tau_lm <= 0.0))
    throw ConfigError(0, "[optics] incomplete: need laser_freq_hz, tau_mb, tau_lm");
  if (!(cfg.filter.tau_av > 0.0)) throw ConfigError(0, "[filter] tau_av must be > 0");

  if ((cfg.mode == RunMode::monte_carlo || cfg.mode == RunMode::all) && !cfg.seed)
    throw ConfigError(0, "run mode monte_carlo requires a seed ([run] seed or --seed)");
  if ((cfg.mode == RunMode::closed_form || cfg.mode == RunMode::all) &&
      cfg.background.kind != SpectrumKind::flat)
    throw ConfigError(0, "closed_form mode needs a flat background");

  if (cfg.sweep.present) {
    static const char* allowed[] = {"background.flat", "geometry.alpha_rad", "geometry.v_at",
                                    "geometry.tau_ab", "geometry.mass",      "optics.laser_freq_hz",
                                    "optics.tau_mb",   "optics.tau_lm",      "filter.tau_av"};
    if (std::find_if(std::begin(allowed), std::end(allowed), [&](const char* p) {
          return cfg.sweep.parameter == p;
        }) == std::end(allowed))
      throw ConfigError(seen_line.count("sweep.parameter") ? seen_line["sweep.parameter"] : 0,
                        "sweep parameter '" + cfg.sweep.parameter +
                            "' does not name a sweepable scalar field");
    if (cfg.sweep.count < 1) throw ConfigError(0, "[sweep] count must be >= 1");
    if (cfg.sweep.parameter.rfind("optics.", 0) == 0 && !cfg.optics.present)
      throw ConfigError(0, "sweep over an optics parameter but optics are absent");
    if (cfg.sweep.log_scale && (!(cfg.sweep.from > 0.0) || !(cfg.sweep.to > 0.0)))
      throw ConfigError(0, "[sweep] log scale requires positive endpoints");
  }
  if (cfg.mc.n_omega < 2 || cfg.mc.n_dir < 2 || cfg.mc.realizations < 30 || cfg.mc.launches < 2)
    throw ConfigError(0, "[mc] needs n_omega >= 2, n_dir >= 2, realizations >= 30, launches >= 2");
  if (cfg.quadrature.n_theta < 1 || cfg.quadrature.n_phi < 1)
    throw ConfigError(0, "[quadrature] node counts must be >= 1");
  if (!(cfg.integrator.cutoff_factor > 0.0) || !(cfg.integrator.phase_per_panel > 0.0) ||
      cfg.integrator.max_panels < 100)
    throw ConfigError(0, "[integrator] needs cutoff_factor > 0, phase_per_panel > 0, "
                         "max_panels >= 100");
  if (!(cfg.tol > 0.0)) throw ConfigError(0, "[run] tol must be > 0");
  return cfg;
}

inline ScenarioConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

inline std::string serialize_config(const ScenarioConfig& c) {
  using detail::format_double;
  std::ostringstream os;
  os << "[background]\n";
  os << "kind = "
     << (c.background.kind == SpectrumKind::flat
             ? "flat"
             : c.background.kind == SpectrumKind::piecewise_power_law ? "power_law" : "table")
     << "\n";
  if (c.background.kind == SpectrumKind::flat)
    os << "flat = " << format_double(c.background.flat_level) << "\n";
  if (c.background.kind == SpectrumKind::tabulated)
    os << "table = " << c.background.table_path << "\n";
  if (c.background.kind == SpectrumKind::piecewise_power_law) {
    os << "segments = ";
    for (std::size_t i = 0; i < c.background.segments.size(); ++i) {
      const auto& s = c.background.segments[i];
      os << (i ? ", " : "") << format_double(s[0]) << ":" << format_double(s[1]) << ":"
         << format_double(s[2]);
    }
    os << "\n";
  }
  os << "band_min_hz = " << format_double(c.background.band_min_hz) << "\n";
  os << "band_max_hz = " << format_double(c.background.band_max_hz) << "\n";
  os << "\n[geometry]\n";
  os << "alpha_rad = " << format_double(c.geometry.alpha_rad) << "\n";
  os << "v_at = " << format_double(c.geometry.v_at) << "\n";
  os << "tau_ab = " << format_double(c.geometry.tau_ab) << "\n";
  os << "mass = " << format_double(c.geometry.mass) << "\n";
  if (c.optics.present) {
    os << "\n[optics]\n";
    os << "laser_freq_hz = " << format_double(c.optics.laser_freq_hz) << "\n";
    os << "tau_mb = " << format_double(c.optics.tau_mb) << "\n";
    os << "tau_lm = " << format_double(c.optics.tau_lm) << "\n";
  }
  os << "\n[filter]\n";
  os << "tau_av = " << format_double(c.filter.tau_av) << "\n";
  os << "\n[run]\n";
  os << "mode = "
     << (c.mode == RunMode::closed_form
             ? "closed_form"
             : c.mode == RunMode::spectral ? "spectral"
                                           : c.mode == RunMode::monte_carlo ? "monte_carlo" : "all")
     << "\n";
  if (c.seed) os << "seed = " << *c.seed << "\n";
  os << "tol = " << format_double(c.tol) << "\n";
  os << "jobs = " << c.jobs << "\n";
  if (c.sweep.present) {
    os << "\n[sweep]\n";
    os << "parameter = " << c.sweep.parameter << "\n";
    os << "from = " << format_double(c.sweep.from) << "\n";
    os << "to = " << format_double(c.sweep.to) << "\n";
    os << "count = " << c.sweep.count << "\n";
    os << "scale = " << (c.sweep.log_scale ? "log" : "linear") << "\n";
  }
  os << "\n[mc]\n";
  os << "n_omega = " << c.mc.n_omega << "\n";
  os << "n_dir = " << c.mc.n_dir << "\n";
  os << "realizations = " << c.mc.realizations << "\n";
  os << "launches = " << c.mc.launches << "\n";
  os << "launch_dt = " << format_double(c.mc.launch_dt) << "\n";
  os << "burn_in = " << format_double(c.mc.burn_in) << "\n";
  os << "export_series = " << (c.mc.export_series ? "true" : "false") << "\n";
  os << "\n[quadrature]\n";
  os << "n_theta = " << c.quadrature.n_theta << "\n";
  os << "n_phi = " << c.quadrature.n_phi << "\n";
  os << "\n[integrator]\n";
  os << "cutoff_factor = " << format_double(c.integrator.cutoff_factor) << "\n";
  os << "phase_per_panel = " << format_double(c.integrator.phase_per_panel) << "\n";
  os << "max_panels = " << c.integrator.max_panels << "\n";
  os << "\n[output]\n";
  os << "dir = " << c.out_dir << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Sweep expansion

inline void apply_sweep_value(ScenarioConfig& c, const std::string& param, double v) {
  if (param == "background.flat")
    c.background.flat_level = v;
  else if (param == "geometry.alpha_rad")
    c.geometry.alpha_rad = v;
  else if (param == "geometry.v_at")
    c.geometry.v_at = v;
  else if (param == "geometry.tau_ab")
    c.geometry.tau_ab = v;
  else if (param == "geometry.mass")
    c.geometry.mass = v;
  else if (param == "optics.laser_freq_hz")
    c.optics.laser_freq_hz = v;
  else if (param == "optics.tau_mb")
    c.optics.tau_mb = v;
  else if (param == "optics.tau_lm")
    c.optics.tau_lm = v;
  else if (param == "filter.tau_av")
    c.filter.tau_av = v;
  else
    throw ConfigError(0, "unknown sweep parameter '" + param + "'");
}

inline double sweep_value_at(const SweepSpec& sw, int i) {
  if (sw.count <= 1) return sw.from;
  const double t = static_cast<double>(i) / (sw.count - 1);
  return sw.log_scale ? sw.from * std::pow(sw.to / sw.from, t)
                      : sw.from + (sw.to - sw.from) * t;
}

inline std::vector<ScenarioConfig> expand_scenarios(const ScenarioConfig& c) {
  if (!c.sweep.present) return {c};
  std::vector<ScenarioConfig> out;
  out.reserve(c.sweep.count);
  for (int i = 0; i < c.sweep.count; ++i) {
    ScenarioConfig sc = c;
    sc.sweep.present = false;
    apply_sweep_value(sc, c.sweep.parameter, sweep_value_at(c.sweep, i));
    out.push_back(std::move(sc));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Execution

struct ClosedFormResult {
  double atomic_variance = 0.0;
  double photonic_variance = 0.0;
  double total_variance = 0.0;
  double visibility = 1.0;
};

struct ScenarioResult {
  std::size_t index = 0;
  std::optional<double> sweep_value;
  std::optional<ClosedFormResult> closed;
  std::optional<DecoherenceResult> spectral;
  std::optional<mc::EnsembleResult> monte_carlo;
  double wall_seconds = 0.0;
};

struct Report {
  ScenarioConfig config;
  std::vector<ScenarioResult> rows;
  double wall_seconds = 0.0;
};

// Atomic file write: stage to a temp file in the same directory, then rename.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string());
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << contents;
    if (!out) throw IoError("short write to " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + " to " + path.string());
}

inline ScenarioResult run_one_scenario(const ScenarioConfig& c, std::size_t index,
                                       std::optional<double> sweep_value, unsigned jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioResult r;
  r.index = index;
  r.sweep_value = sweep_value;

  const GwBackground bg = c.background.build();
  const RhombGeometry g = c.geometry.build();
  std::optional<RamanOptics> optics;
  if (c.optics.present) optics = c.optics.build(c.geometry.mass);
  const LorentzianHighPass filter = LorentzianHighPass::from_averaging_time(c.filter.tau_av);
  const double gamma = filter.bandwidth();

  const bool want_closed = c.mode == RunMode::closed_form || c.mode == RunMode::all;
  const bool want_spectral = c.mode == RunMode::spectral || c.mode == RunMode::all;
  const bool want_mc = c.mode == RunMode::monte_carlo || c.mode == RunMode::all;

  if (want_closed) {
    ClosedFormResult cf;
    cf.atomic_variance = flat_atomic_variance(g, c.background.flat_level, gamma);
    if (optics) cf.photonic_variance = flat_photonic_variance(g, *optics, c.background.flat_level);
    cf.total_variance = cf.atomic_variance + cf.photonic_variance;
    cf.visibility = visibility(cf.total_variance);
    r.closed = cf;
  }
  if (want_spectral) {
    auto q = AngularQuadrature::gauss_legendre(c.quadrature.n_theta, c.quadrature.n_phi);
    ApparatusResponse rsp = optics ? ApparatusResponse::combined_sum(g, *optics, std::move(q), jobs)
                                   : ApparatusResponse::atomic(g);
    IntegrationOptions iopts;
    iopts.rel_tol = c.tol;
    iopts.cutoff_factor = c.integrator.cutoff_factor;
    iopts.phase_per_panel = c.integrator.phase_per_panel;
    iopts.max_panels = static_cast<std::size_t>(c.integrator.max_panels);
    r.spectral = variance_integral(bg, rsp, filter, iopts);
  }
  if (want_mc) {
    mc::EnsembleOptions mo;
    mo.grid = {c.mc.n_omega, bg.band()};
    mo.n_dir = c.mc.n_dir;
    mo.realizations = c.mc.realizations;
    double dt = c.mc.launch_dt;
    if (dt <= 0.0) dt = constants::two_pi / bg.band().omega_max / 24.0;
    mo.launches = {0.0, dt, c.mc.launches};
    mo.burn_in_fraction = c.mc.burn_in;
    mo.seed = *c.seed + index;  // stream-split across sweep scenarios
    mo.parts = optics ? mc::DephasingParts::combined : mc::DephasingParts::atomic;
    mo.jobs = jobs;
    r.monte_carlo = mc::run_ensemble(bg, g, optics ? &*optics : nullptr, gamma, mo);
    if (c.mc.export_series) {
      const auto re = mc::synthesize(bg, mo.grid, mo.n_dir, derive_seed(mo.seed, 0));
      const auto raw = mc::dephasing_series(re, g, optics ? &*optics : nullptr, mo.launches,
                                            mo.parts, mo.segment);
      const auto filtered = mc::highpass_filter(raw, gamma, mo.launches.dt);
      std::ostringstream ss;
      mc::write_series_csv(ss, mo.launches, raw, filtered);
      char name[40];
      std::snprintf(name, sizeof name, "mc_series_%03zu.csv", index);
      write_file_atomic(std::filesystem::path(c.out_dir) / name, ss.str());
    }
  }

  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::string scenario_csv_row(const ScenarioResult& r, const std::string& sweep_param) {
  using detail::format_double;
  std::ostringstream os;
  os << r.index << "," << sweep_param << ","
     << (r.sweep_value ? format_double(*r.sweep_value) : "");
  auto put = [&os](bool present, double v) {
    os << ",";
    if (present) os << detail::format_double(v);
  };
  const bool c = r.closed.has_value();
  put(c, c ? r.closed->atomic_variance : 0.0);
  put(c, c ? r.closed->photonic_variance : 0.0);
  put(c, c ? r.closed->total_variance : 0.0);
  put(c, c ? r.closed->visibility : 0.0);
  const bool s = r.spectral.has_value();
  put(s, s ? r.spectral->breakdown.atomic : 0.0);
  put(s, s ? r.spectral->breakdown.photonic : 0.0);
  put(s, s ? r.spectral->variance : 0.0);
  put(s, s ? r.spectral->visibility : 0.0);
  const bool m = r.monte_carlo.has_value();
  put(m, m ? r.monte_carlo->estimate.variance : 0.0);
  put(m, m ? r.monte_carlo->estimate.variance_stderr : 0.0);
  put(m, m ? r.monte_carlo->estimate.visibility : 0.0);
  // mutual relative deviations where both routes are present
  os << ",";
  if (c && s && r.closed->total_variance != 0.0)
    os << format_double(r.spectral->variance / r.closed->total_variance - 1.0);
  os << ",";
  if (s && m && r.spectral->variance != 0.0)
    os << format_double(r.monte_carlo->estimate.variance / r.spectral->variance - 1.0);
  os << "\n";
  return os.str();
}

inline const char* scenario_csv_header() {
  return "scenario,sweep_parameter,sweep_value,closed_atomic_var,closed_photonic_var,"
         "closed_total_var,closed_visibility,spectral_atomic_var,spectral_photonic_var,"
         "spectral_total_var,spectral_visibility,mc_var,mc_var_stderr,mc_visibility,"
         "rel_dev_spectral_vs_closed,rel_dev_mc_vs_spectral\n";
}

inline Report run_scenarios(const ScenarioConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  Report rep;
  rep.config = cfg;
  const auto scenarios = expand_scenarios(cfg);
  rep.rows.resize(scenarios.size());

  const unsigned jobs = cfg.jobs > 0 ? cfg.jobs : default_jobs();
  // Sweeps parallelize across scenarios; single scenarios parallelize inside.
  const bool across = scenarios.size() > 1;
  const unsigned outer = across ? jobs : 1;
  const unsigned inner = across ? 1 : jobs;

  std::exception_ptr first_error;
  std::mutex err_mutex;
  parallel_for(scenarios.size(), outer, [&](std::size_t i) {
    try {
      std::optional<double> sv;
      if (cfg.sweep.present) sv = sweep_value_at(cfg.sweep, i);
      rep.rows[i] = run_one_scenario(scenarios[i], i, sv, inner);
      // per-scenario file, written atomically on completion
      std::ostringstream os;
      os << scenario_csv_header() << scenario_csv_row(rep.rows[i], cfg.sweep.parameter);
      char name[32];
      std::snprintf(name, sizeof name, "scenario_%03zu.csv", i);
      write_file_atomic(std::filesystem::path(cfg.out_dir) / name, os.str());
    } catch (...) {
      std::lock_guard<std::mutex> lk(err_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  });
  if (first_error) std::rethrow_exception(first_error);

  std::ostringstream os;
  os << scenario_csv_header();
  for (const auto& r : rep.rows) os << scenario_csv_row(r, cfg.sweep.parameter);
  write_file_atomic(std::filesystem::path(cfg.out_dir) / "summary.csv", os.str());

  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// Human-readable summary (stdout); timing lives here, not in the CSVs.
inline void print_report(std::ostream& os, const Report& rep) {
  namespace k = constants;
  os << "gravidec report\n";
  os << "  constants: c = " << detail::format_double(k::c_light)
     << " m/s, G = " << detail::format_double(k::newton_g)
     << ", hbar = " << detail::format_double(k::hbar)
     << ", k_B = " << detail::format_double(k::k_boltzmann) << "\n";
  os << "  config echo:\n";
  std::istringstream echo(serialize_config(rep.config));
  for (std::string line; std::getline(echo, line);)
    if (!line.empty()) os << "    " << line << "\n";
  for (const auto& r : rep.rows) {
    os << "scenario " << r.index;
    if (r.sweep_value)
      os << " (" << rep.config.sweep.parameter << " = " << detail::format_double(*r.sweep_value)
         << ")";
    os << " [" << detail::format_double(r.wall_seconds) << " s]\n";
    auto line = [&os](const char* tag, double var, double vis) {
      os << "  " << tag << ": variance = " << detail::format_double(var)
         << " rad^2, visibility = " << detail::format_double(vis) << "\n";
    };
    if (r.closed) line("closed-form", r.closed->total_variance, r.closed->visibility);
    if (r.spectral) line("spectral   ", r.spectral->variance, r.spectral->visibility);
    if (r.spectral) {
      os << "  integrator: " << r.spectral->diagnostics.evaluations << " evaluations, "
         << r.spectral->diagnostics.panels << " panels, error estimate "
         << detail::format_double(r.spectral->diagnostics.abs_error_estimate) << "\n";
      for (const auto& w : r.spectral->diagnostics.warnings) os << "  note: " << w << "\n";
    }
    if (r.monte_carlo)
      os << "  monte-carlo: variance = "
         << detail::format_double(r.monte_carlo->estimate.variance) << " +- "
         << detail::format_double(r.monte_carlo->estimate.variance_stderr)
         << " rad^2, visibility = "
         << detail::format_double(r.monte_carlo->estimate.visibility) << "\n";
    if (r.closed && r.spectral && r.closed->total_variance != 0.0)
      os << "  spectral/closed-form - 1 = "
         << detail::format_double(r.spectral->variance / r.closed->total_variance - 1.0) << "\n";
    if (r.spectral && r.monte_carlo && r.spectral->variance != 0.0)
      os << "  mc/spectral - 1 = "
         << detail::format_double(r.monte_carlo->estimate.variance / r.spectral->variance - 1.0)
         << "\n";
  }
  os << "total wall time: " << detail::format_double(rep.wall_seconds) << " s\n";
}

// ---------------------------------------------------------------------------
// Tabulations

enum class Tabulation { response, y_curve, f_identities, spectrum };

inline Tabulation tabulation_from_name(const std::string& s) {
  if (s == "response") return Tabulation::response;
  if (s == "y_curve") return Tabulation::y_curve;
  if (s == "f_identities") return Tabulation::f_identities;
  if (s == "spectrum") return Tabulation::spectrum;
  throw ConfigError(0, "unknown tabulation '" + s + "' (response|y_curve|f_identities|spectrum)");
}

inline std::filesystem::path tabulate(const ScenarioConfig& cfg, Tabulation what) {
  using detail::format_double;
  std::ostringstream os;
  std::string filename;
  switch (what) {
    case Tabulation::y_curve: {
      filename = "y_curve.csv";
      os << "x,y\n";
      const int n = 200;
      for (int i = 0; i < n; ++i) {
        const double x = 0.1 * std::pow(20.0 / 0.1, static_cast<double>(i) / (n - 1));
        os << format_double(x) << "," << format_double(photon_time_ratio(x)) << "\n";
      }
      break;
    }
    case Tabulation::response: {
      filename = "response.csv";
      const RhombGeometry g = cfg.geometry.build();
      std::optional<RamanOptics> optics;
      if (cfg.optics.present) optics = cfg.optics.build(cfg.geometry.mass);
      const auto q = AngularQuadrature::gauss_legendre(cfg.quadrature.n_theta, cfg.quadrature.n_phi);
      os << "omega_rad_s,A_atomic,A_photonic,A_combined\n";
      const int n = 200;
      const double lo = constants::two_pi * 1e-6, hi = constants::two_pi * 1.0;
      for (int i = 0; i < n; ++i) {
        const double w = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        const double a_at = atomic_response(g, w);
        const double a_ph = optics ? photonic_response(g, *optics, w, q) : 0.0;
        os << format_double(w) << "," << format_double(a_at) << "," << format_double(a_ph) << ","
           << format_double(a_at + a_ph) << "\n";
      }
      break;
    }
    case Tabulation::f_identities: {
      filename = "f_identities.csv";
      os << "x,y,f_x,f_y,square_identity_residual,product_identity_residual\n";
      auto rng = make_engine(cfg.seed ? *cfg.seed : 7, 0xF1D);
      std::uniform_real_distribution<double> u(-20.0, 20.0);
      for (int i = 0; i < 20; ++i) {
        const double x = u(rng), y = u(rng);
        const double fx = f_osc(x), fy = f_osc(y);
        const double sq = fx * fx - (4.0 * f_osc(x) - f_osc(2.0 * x));
        const double pr = fx * fy - (2.0 * fx + 2.0 * fy - f_osc(x + y) - f_osc(x - y));
        os << format_double(x) << "," << format_double(y) << "," << format_double(fx) << ","
           << format_double(fy) << "," << format_double(sq) << "," << format_double(pr) << "\n";
      }
      break;
    }
    case Tabulation::spectrum: {
      filename = "spectrum.csv";
      const GwBackground bg = cfg.background.build();
      os << "omega_rad_s,S_h_per_hz\n";
      const int n = 200;
      const double lo = bg.band().omega_min / 2.0, hi = bg.band().omega_max * 2.0;
      for (int i = 0; i < n; ++i) {
        const double w = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
        os << format_double(w) << "," << format_double(bg(w)) << "\n";
      }
      break;
    }
  }
  const std::filesystem::path path = std::filesystem::path(cfg.out_dir) / filename;
  write_file_atomic(path, os.str());
  return path;
}

}  // namespace gravidec
