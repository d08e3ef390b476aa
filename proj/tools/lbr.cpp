#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include "lbr/errors.hpp"
#include "lbr/experiment.hpp"

namespace {

struct Options {
  std::string config;
  std::string preset;
  std::string output;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON experiment config");
  cmd->add_option("--preset", o.preset, "built-in experiment")->check(CLI::IsMember({"figure2", "figure3"}));
  cmd->add_option("--output", o.output, "output file, - for stdout (overrides output.path)");
  cmd->add_option("--seed", o.seed, "simulation seed (overrides sim.seed)");
}

lbr::ExperimentConfig resolve(const Options& o) {
  if (!o.config.empty() && !o.preset.empty()) throw lbr::ConfigError("give either --config or --preset");
  lbr::ExperimentConfig c;
  if (!o.preset.empty())
    c = lbr::preset(o.preset);
  else if (!o.config.empty())
    c = lbr::load_config(o.config);
  else
    c = lbr::parse_config(nlohmann::json::object());
  if (!o.output.empty()) c.output.path = o.output;
  if (o.seed) c.sim.seed = *o.seed;
  return c;
}

template <class Fn>
int dispatch(const Options& o, Fn&& fn) {
  try {
    const lbr::ExperimentConfig c = resolve(o);
    if (c.output.path == "-") return fn(c, std::cout);
    std::ofstream out(c.output.path);
    if (!out) throw lbr::ConfigError("cannot write '" + c.output.path + "'");
    return fn(c, out);
  } catch (const lbr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return lbr::kExitConfig;
  } catch (const lbr::DomainError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return lbr::kExitConfig;
  } catch (const lbr::OverloadError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return lbr::kExitInfeasible;
  } catch (const lbr::DivergenceError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return lbr::kExitInfeasible;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Load-balanced router bounds, simulation and energy tradeoffs"};
  app.set_version_flag("--version", lbr::kToolVersion);
  app.require_subcommand(1);

  Options o;
  auto* bounds = app.add_subcommand("bounds", "evaluate analytic tail bounds");
  auto* simulate = app.add_subcommand("simulate", "run the slotted simulator");
  auto* validate = app.add_subcommand("validate", "check simulated tails against the bounds");
  auto* tradeoff = app.add_subcommand("tradeoff", "energy-delay frontier or lookup table");
  for (auto* cmd : {bounds, simulate, validate, tradeoff}) add_common(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : lbr::kExitConfig;
  }

  if (*bounds) return dispatch(o, [](const auto& c, std::ostream& out) { return lbr::cmd_bounds(c, out, std::cerr); });
  if (*simulate)
    return dispatch(o, [](const auto& c, std::ostream& out) { return lbr::cmd_simulate(c, out, std::cerr); });
  if (*validate)
    return dispatch(o, [](const auto& c, std::ostream& out) { return lbr::cmd_validate(c, out, std::cerr); });
  return dispatch(o, [](const auto& c, std::ostream& out) { return lbr::cmd_tradeoff(c, out, std::cerr); });
}
