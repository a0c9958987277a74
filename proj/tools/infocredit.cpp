#include <cstdint>
#include <iostream>

#include <CLI11.hpp>

#include "infocredit/app.hpp"

namespace app = infocredit::app;

int main(int argc, char** argv) {
  CLI::App cli{"Information-based credit model: bond, hazard, option and basket pricing from a JSON config"};
  cli.set_version_flag("--version", app::kVersion);

  app::Request request;
  std::uint64_t seed = 0;
  std::uint64_t paths = 0;
  cli.add_option("command", request.command, "density | bond | hazard | simulate | option | implied-sigma | basket")
      ->required()
      ->check(CLI::IsMember(app::command_names()));
  cli.add_option("--config", request.config, "JSON run configuration")->required();
  cli.add_option("--out", request.out_dir, "output directory")->required();
  cli.add_flag("--plot", request.plot, "also write plot.svg");
  auto* seed_opt = cli.add_option("--seed", seed, "override numerics.seed");
  auto* paths_opt = cli.add_option("--paths", paths, "override numerics.n_paths");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << app::error_record(app::schema, e.what()).dump() << '\n';
    return app::schema;
  }
  if (seed_opt->count()) request.overrides.seed = seed;
  if (paths_opt->count()) request.overrides.paths = paths;
  return app::run(request, std::cerr);
}
