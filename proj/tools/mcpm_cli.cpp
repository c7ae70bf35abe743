// mcpm: channel taps, design points and BER experiments from an INI config.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mcpm/commands.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_runtime = 3;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::optional<std::string> policy;
};

mcpm::RunConfig load(const Options& o) {
  std::ifstream in(o.config);
  if (!in) throw mcpm::ConfigError("cannot open config '" + o.config + "'");
  auto rc = mcpm::parse_config(in);
  auto& e = rc.experiment;
  if (const char* env = std::getenv("MCPM_THREADS"); env && *env) {
    try {
      e.threads = static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      throw mcpm::ConfigError("MCPM_THREADS must be a non-negative integer");
    }
  }
  if (o.threads) e.threads = *o.threads;
  if (e.threads == 0) e.threads = std::max(1u, std::thread::hardware_concurrency());
  if (o.seed) e.seed = *o.seed;
  if (o.policy) e.policy = mcpm::parse_design_policy(*o.policy);
  e.validate();
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MCPM molecular link toolkit"};
  app.require_subcommand(1, 1);
  Options opt;
  const char* names[] = {"coeffs", "design", "simulate", "sweep", "analytic"};
  const char* help[] = {"channel coefficients h_n", "(alpha, gamma) design report", "BER of every scheme",
                        "BER over a parameter sweep", "analytic vs simulated BER"};
  for (int i = 0; i < 5; ++i) {
    auto* sub = app.add_subcommand(names[i], help[i]);
    sub->add_option("--config", opt.config, "INI run configuration")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "CSV output path (default: [output] path, else stdout)");
    sub->add_option("--seed", opt.seed, "master seed override");
    sub->add_option("--threads", opt.threads, "worker threads (0 = hardware); overrides MCPM_THREADS");
    sub->add_option("--policy", opt.policy, "design policy override")
        ->check(CLI::IsMember({"theoretical", "exhaustive", "fixed"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  mcpm::RunConfig rc;
  try {
    rc = load(opt);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  }

  try {
    mcpm::csv::Table table;
    if (cmd == "coeffs") {
      table = mcpm::cmd_coeffs(rc);
    } else if (cmd == "design") {
      table = mcpm::cmd_design(rc);
    } else if (cmd == "simulate") {
      table = mcpm::cmd_simulate(rc);
    } else if (cmd == "sweep") {
      table = mcpm::cmd_sweep(rc);
    } else {
      table = mcpm::cmd_analytic(rc);
    }
    const std::string path = !opt.out.empty() ? opt.out : rc.output_path;
    if (path.empty() || path == "-") {
      mcpm::csv::write(std::cout, table);
    } else {
      mcpm::csv::write_file(path, table);
    }
  } catch (const mcpm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_runtime;
  }
  return 0;
}
