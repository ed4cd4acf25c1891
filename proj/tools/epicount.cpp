// epicount: command-line front end for the counting-function experiments.

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "epicount/commands.hpp"

namespace {

std::vector<std::string> split_ws(const std::vector<std::string>& args) {
  std::vector<std::string> out;
  for (const auto& a : args) {
    std::istringstream ss(a);
    for (std::string tok; ss >> tok;) out.push_back(tok);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace epicount::cli;
  CLI::App app{"Counting functions, moment measures and laws of large numbers"};
  app.require_subcommand(1);

  SimulateOptions sim;
  std::string sim_out = ".";
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed_override;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run an experiment config and write CSV + JSON reports");
  simulate_cmd->add_option("config", sim.config, "Experiment config file")->required();
  simulate_cmd->add_option("--out", sim_out, "Output directory");
  simulate_cmd->add_option("--threads", threads, "Worker threads (overrides the config)");
  simulate_cmd->add_option("--seed-override", seed_override, "Replace the config seed");

  MomentsOptions mom;
  std::string mom_instance, mom_measure;
  auto* moments_cmd = app.add_subcommand("moments", "Print the exact moment integrals and bound_2");
  moments_cmd->add_option("ordering", mom.ordering,
                          "singletons[:n] | interval | charfun:<pred> | maximal-subgroups")
      ->required();
  moments_cmd->add_option("--instance", mom_instance, "subsets | abgroups");
  moments_cmd->add_option("--measure", mom_measure, "constant:<p> | cramer | table:<path> | one");
  moments_cmd->add_option("--n", mom.n, "Index (repeatable)");

  EpiProductOptions ep;
  std::vector<std::string> ep_args;
  std::string ep_instance;
  std::optional<std::uint64_t> ep_bound;
  auto* epi_cmd = app.add_subcommand("epi-product", "Search for the epi-product of two objects");
  epi_cmd->add_option("objects", ep_args, "Two objects, e.g. C2 C3 or {1,2} {2,3}")->required();
  epi_cmd->add_option("--instance", ep_instance, "subsets | abgroups (default: inferred)");
  epi_cmd->add_option("--bound", ep_bound, "Size bound for candidates and witnesses");

  CheckMeasureOptions cm;
  auto* check_cmd = app.add_subcommand("check-measure", "Evaluate the level measure v over 2^D and report min v");
  check_cmd->add_option("level", cm.level, "D as {1,2,3} or a size d meaning {1..d}")->required();
  check_cmd->add_option("--measure", cm.measure, "Measure key");
  check_cmd->add_option("--instance", cm.instance, "Only subsets has level posets");

  std::string suite = "fast";
  std::optional<int> only;
  auto* verify_cmd = app.add_subcommand("verify", "Run the acceptance criteria");
  verify_cmd->add_option("suite", suite, "fast | full")->check(CLI::IsMember({"fast", "full"}));
  verify_cmd->add_option("--only", only, "Run a single criterion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : usage;
  }

  if (*simulate_cmd) {
    sim.out_dir = sim_out;
    sim.threads = threads;
    sim.seed_override = seed_override;
    return guarded("simulate", std::cerr, [&] { return simulate(sim, std::cout); });
  }
  if (*moments_cmd) {
    if (!mom_instance.empty()) mom.instance = mom_instance;
    if (!mom_measure.empty()) mom.measure = mom_measure;
    return guarded("moments", std::cerr, [&] { return moments(mom, std::cout); });
  }
  if (*epi_cmd) {
    const auto objs = split_ws(ep_args);
    if (objs.size() != 2) {
      std::cerr << "epi-product: expected exactly two objects\n";
      return usage;
    }
    ep.g = objs[0];
    ep.h = objs[1];
    if (!ep_instance.empty()) ep.instance = ep_instance;
    ep.bound = ep_bound;
    return guarded("epi-product", std::cerr, [&] { return epi_product_cmd(ep, std::cout); });
  }
  if (*check_cmd) return guarded("check-measure", std::cerr, [&] { return check_measure(cm, std::cout); });
  if (*verify_cmd) return guarded("verify", std::cerr, [&] { return verify(suite, std::cout, only); });
  return usage;
}
