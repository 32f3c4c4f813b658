#include "nanowire/commands.hpp"
#include "nanowire/output.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace nanowire;
  CLI::App app{"Quantum-wire transport: Bloch bands, Poisson, drift-diffusion and kinetic drivers"};
  app.set_version_flag("--version", std::string("nanowire ") + kToolVersion);
  std::string verb, config_path, out_dir;
  CommandContext ctx;
  app.add_option("verb", verb, "bloch | poisson | dd | kinetic-sweep | run | convergence")
      ->required()
      ->check(CLI::IsMember(command_verbs()));
  app.add_option("--config", config_path, "TOML run configuration")->required();
  app.add_option("--out", out_dir, "output directory (default: output.directory of the config)");
  app.add_option("--seed", ctx.seed, "seed of the eigensolver start vectors");
  app.add_option("--threads", ctx.threads, "accepted for compatibility; runs are sequential")
      ->check(CLI::PositiveNumber);
  app.add_flag("--verbose", ctx.verbose, "progress on stderr");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    nlohmann::ordered_json j = {{"status", "error"},
                                {"error", {{"type", "usage_error"}, {"message", e.what()}}}};
    std::cout << j.dump() << '\n';
    return 2;
  }

  try {
    const RunConfig config = load_config(config_path);
    ctx.out_dir = out_dir.empty() ? std::filesystem::path(config.output.directory) : std::filesystem::path(out_dir);
    std::cout << run_command(verb, config, ctx).dump() << '\n';
    return 0;
  } catch (const std::exception& e) {
    const ErrorReport r = describe_error(e);
    std::cout << r.json.dump() << '\n';
    return r.exit_code;
  }
}
