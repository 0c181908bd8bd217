#include "fracflow/scenarios.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <optional>
#include <string>
#include <thread>
#include <vector>

int main(int argc, char** argv) {
  CLI::App app{"Nonlinear flow solvers for fractured porous media"};
  app.require_subcommand(1);

  std::string out_dir;
  int threads = static_cast<int>(std::thread::hardware_concurrency());
  if (threads < 1) threads = 1;
  double tol_value = 0.0;

  auto add_common = [&](CLI::App* sub, bool with_tol) {
    sub->add_option("--out", out_dir, "Output directory (overrides config)");
    sub->add_option("--threads", threads, "Worker threads for sweeps");
    if (with_tol) {
      sub->add_option("--tol", tol_value,
                      "Override the nonlinear solver relative tolerance");
    }
  };

  std::string run_config;
  CLI::App* run = app.add_subcommand("run", "Solve one scenario from a config file");
  run->add_option("config", run_config, "INI config file")->required();
  add_common(run, true);

  std::string sweep_config;
  CLI::App* sweep =
      app.add_subcommand("sweep", "Parameter sweep over thickness/inertia grids");
  sweep->add_option("config", sweep_config, "INI config file")->required();
  add_common(sweep, true);

  std::vector<std::string> dirs;
  CLI::App* compare =
      app.add_subcommand("compare", "Compare two or more finished run directories");
  compare->add_option("dirs", dirs, "Run directories")->required()->expected(-2);
  add_common(compare, false);

  CLI11_PARSE(app, argc, argv);

  std::optional<double> tol;
  if ((run->parsed() && run->count("--tol")) ||
      (sweep->parsed() && sweep->count("--tol"))) {
    tol = tol_value;
  }

  fracflow::CommandResult res;
  if (run->parsed()) {
    res = fracflow::cmd_run(run_config, out_dir, threads, tol);
  } else if (sweep->parsed()) {
    res = fracflow::cmd_sweep(sweep_config, out_dir, threads, tol);
  } else {
    res = fracflow::cmd_compare(dirs, out_dir);
  }

  std::FILE* stream = res.exit_code == 0 ? stdout : stderr;
  if (!res.message.empty()) std::fprintf(stream, "%s\n", res.message.c_str());
  return res.exit_code;
}
