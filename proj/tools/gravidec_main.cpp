// gravidec: dephasing variance and fringe visibility of atomic/photonic
// Mach-Zehnder interferometers in a stochastic gravitational-wave background.
//
// Subcommands:
//   gravidec run <config>                 execute the scenario(s)
//   gravidec tabulate <config> --what W   write a CSV tabulation
//
// Exit codes: 0 ok, 1 config error, 2 numerical non-convergence, 3 I/O error.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "gravidec/quadrature.hpp"
#include "gravidec/scenario.hpp"

namespace {

struct CommonFlags {
  std::optional<unsigned> jobs;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<std::string> out_dir;
};

void apply_flags(gravidec::ScenarioConfig& cfg, const CommonFlags& f) {
  if (f.jobs) cfg.jobs = *f.jobs;
  if (f.seed) cfg.seed = *f.seed;
  if (f.tol) {
    if (!(*f.tol > 0.0)) throw gravidec::ConfigError(0, "--tol must be > 0");
    cfg.tol = *f.tol;
  }
  if (f.out_dir) cfg.out_dir = *f.out_dir;
  if ((cfg.mode == gravidec::RunMode::monte_carlo || cfg.mode == gravidec::RunMode::all) &&
      !cfg.seed)
    throw gravidec::ConfigError(0, "run mode monte_carlo requires a seed ([run] seed or --seed)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Dephasing variance and fringe visibility of atom interferometers in a stochastic "
      "gravitational-wave background.\n"
      "Config units: frequencies in Hz, times in s, angles in rad, masses in kg, S_h in Hz^-1; "
      "internally everything is angular frequency (rad/s).  GRAVIDEC_JOBS sets the default for "
      "--jobs."};
  app.require_subcommand(1);

  std::string config_path, what = "y_curve";
  CommonFlags flags;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "scenario config file")->required();
    sub->add_option("--jobs", flags.jobs, "worker thread count (default: GRAVIDEC_JOBS or cores)");
    sub->add_option("--seed", flags.seed, "RNG seed (overrides the config)");
    sub->add_option("--tol", flags.tol, "relative tolerance of the spectral integrator");
    sub->add_option("--out-dir", flags.out_dir, "output directory (overrides the config)");
  };

  CLI::App* run_cmd = app.add_subcommand("run", "execute the scenario(s) and write CSV reports");
  add_common(run_cmd);
  CLI::App* tab_cmd = app.add_subcommand("tabulate", "write a CSV tabulation");
  add_common(tab_cmd);
  tab_cmd->add_option("--what", what, "response | y_curve | f_identities | spectrum");

  CLI11_PARSE(app, argc, argv);

  try {
    gravidec::ScenarioConfig cfg = gravidec::parse_config_file(config_path);
    apply_flags(cfg, flags);
    if (run_cmd->parsed()) {
      const gravidec::Report rep = gravidec::run_scenarios(cfg);
      gravidec::print_report(std::cout, rep);
    } else {
      const auto path = gravidec::tabulate(cfg, gravidec::tabulation_from_name(what));
      std::cout << "wrote " << path.string() << "\n";
    }
    return 0;
  } catch (const gravidec::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const gravidec::NonConvergenceError& e) {
    std::cerr << "numerical non-convergence: " << e.what() << "\n";
    return 2;
  } catch (const gravidec::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
