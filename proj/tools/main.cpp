// kns: command line front end for the stochastic Navier-Stokes harnesses.
#include <iostream>

#include <CLI11.hpp>
#include <yaml-cpp/yaml.h>

#include "experiment.hpp"
#include "kns/error.hpp"

namespace {

struct Common {
  std::string config;
  std::string out = "kns-out";
  bool allow_inadmissible = false;
  kns::cli::Overrides ov;
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("config", c.config, "YAML key: value configuration (defaults when omitted)");
  sub->add_option("--seed", c.ov.seed, "Brownian seed");
  sub->add_option("--paths", c.ov.paths, "ensemble size")->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "output directory")->capture_default_str();
  sub->add_flag("--allow-inadmissible", c.allow_inadmissible,
                "run with inadmissible exponents or a non-positive coercivity margin");
  sub->add_option("--snapshot-every", c.ov.snapshot_every, "snapshot stride in steps (0 = none)")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--set", c.ov.set, "override a key, e.g. --set grid.n=64 (repeatable)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kns: stochastic Navier-Stokes with transport noise on the torus"};
  app.require_subcommand(1);
  Common common;
  const std::vector<std::pair<std::string, std::string>> subs = {
      {"simulate", "run an ensemble and write norm series and snapshots"},
      {"energy-check", "energy estimate with a calibrated constant and the discrete energy identity"},
      {"scaling-check", "coupled runs under the parabolic scaling"},
      {"smr-estimate", "empirical maximal-regularity ratios of the linear system"},
      {"serrin-monitor", "Serrin accumulators and blow-up consistency"},
      {"small-data", "survival probability over a ladder of initial amplitudes"},
      {"exponents", "exponent arithmetic: kappa_c, admissibility, Serrin gamma0"},
      {"noise-info", "synthesized noise family and derived constants"},
  };
  for (const auto& [name, help] : subs) add_common(app.add_subcommand(name, help), common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  const std::string preset = app.get_subcommands().front()->get_name();

  kns::cli::ExperimentSpec spec;
  try {
    spec = kns::cli::load_spec(preset, common.config, common.ov, common.allow_inadmissible);
  } catch (const kns::ConfigurationError& e) {
    std::cerr << "kns: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const kns::UnsupportedModeError& e) {
    std::cerr << "kns: unsupported mode: " << e.what() << "\n";
    return 2;
  } catch (const YAML::Exception& e) {
    std::cerr << "kns: configuration error: " << e.what() << "\n";
    return 2;
  }
  spec.out_dir = common.out;
  try {
    return kns::cli::run_experiment(spec, std::cout);
  } catch (const kns::ConfigurationError& e) {
    std::cerr << "kns: configuration error: " << e.what() << "\n";
    return 2;
  } catch (const kns::UnsupportedModeError& e) {
    std::cerr << "kns: unsupported mode: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "kns: " << e.what() << "\n";
    return 1;
  }
}
