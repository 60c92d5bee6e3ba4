// Command-line front end: device table, deadline budgeting and scenario runs.

#include <CLI11.hpp>

#include <iostream>

#include "ehwrt/harness.hpp"

namespace {

using namespace ehwrt;

struct Common {
  std::string profiles_file;

  std::vector<DeviceProfile> extra_profiles() const {
    if (profiles_file.empty()) return {};
    return load_profiles(profiles_file);
  }
};

int cmd_devices(const Common& common) {
  std::cout << render_devices(all_profiles(common.extra_profiles()));
  return 0;
}

struct BudgetArgs {
  std::string device;
  std::string t_program;
  std::string t_eval;
  std::int64_t pop = 0;
  std::int64_t gens = 0;
  std::string deadline;
};

int cmd_budget(const Common& common, const BudgetArgs& a) {
  BudgetQuery q;
  if (!a.device.empty()) {
    const auto profiles = all_profiles(common.extra_profiles());
    const auto& p = find_profile(profiles, a.device);
    q.device_name = p.name;
    q.t_program = p.t_program;
  }
  if (!a.t_program.empty()) q.t_program = parse_duration(a.t_program, "ms");
  if (a.device.empty() && a.t_program.empty())
    throw std::invalid_argument("budget needs --device or --t-program");
  q.t_eval = parse_duration(a.t_eval, "ms");
  q.population = a.pop;
  q.generations = a.gens;
  if (!a.deadline.empty()) q.deadline = parse_duration(a.deadline, "ms");
  const auto report = budget(q);
  std::cout << render_budget(report);
  return report.feasible() ? 0 : 1;
}

struct RunArgs {
  std::string scenario;
  std::string out;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
};

int cmd_run(const Common& common, const RunArgs& a, bool campaign) {
  const auto extra = common.extra_profiles();
  Scenario s = load_scenario(a.scenario, extra);
  if (!a.seeds.empty()) s.seeds = a.seeds;
  const auto report = run_campaign(s, campaign ? a.jobs : 1);
  std::cout << render_report(s, report);
  if (!a.out.empty()) write_artifacts(s, report, a.out);
  return report.all_effective() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Intrinsic-evolution fault recovery simulator with hardware time accounting"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--profiles", common.profiles_file,
                 "YAML file with additional device profiles");

  auto* devices = app.add_subcommand("devices", "List device programming times");

  BudgetArgs budget_args;
  auto* budget_cmd = app.add_subcommand(
      "budget", "Reconfiguration time of an EA plan against a deadline");
  budget_cmd->add_option("--device", budget_args.device, "Device profile id");
  budget_cmd->add_option("--t-program", budget_args.t_program,
                         "Programming time (overrides --device); bare numbers are ms");
  budget_cmd->add_option("--t-eval", budget_args.t_eval, "Fitness test duration (ms)")
      ->required();
  budget_cmd->add_option("--pop", budget_args.pop, "Population size")->required();
  budget_cmd->add_option("--gens", budget_args.gens, "Generations")->required();
  budget_cmd->add_option("--deadline", budget_args.deadline,
                         "Recovery deadline, e.g. 10h, 90min");

  RunArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "Run a scenario once per seed");
  simulate->add_option("scenario", sim_args.scenario, "Scenario file")->required();
  simulate->add_option("--out", sim_args.out, "Directory for CSV artifacts");
  simulate->add_option("--seed", sim_args.seeds, "Seed override (repeatable)");

  RunArgs camp_args;
  auto* campaign = app.add_subcommand("campaign", "Run a seeded campaign");
  campaign->add_option("scenario", camp_args.scenario, "Scenario file")->required();
  campaign->add_option("--out", camp_args.out, "Directory for CSV artifacts");
  campaign->add_option("--seed", camp_args.seeds, "Seed override (repeatable)");
  campaign->add_option("--jobs", camp_args.jobs, "Worker threads")
      ->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (devices->parsed()) return cmd_devices(common);
    if (budget_cmd->parsed()) return cmd_budget(common, budget_args);
    if (simulate->parsed()) return cmd_run(common, sim_args, false);
    if (campaign->parsed()) return cmd_run(common, camp_args, true);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
