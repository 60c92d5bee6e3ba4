#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ehwrt/analog_sim.hpp"
#include "ehwrt/device_model.hpp"
#include "ehwrt/evolution.hpp"
#include "ehwrt/parse_error.hpp"
#include "ehwrt/rt_ledger.hpp"

namespace ehwrt {

inline constexpr int kScenarioSchema = 1;

/// Everything needed to reproduce a recovery experiment.
struct Scenario {
  std::string name;
  DeviceProfile device;
  Benchmark benchmark;
  std::vector<FaultSpec> faults;
  EAParams ea;
  RecoveryRequirement requirement;
  DeadlineBoundary boundary = DeadlineBoundary::Inclusive;
  std::vector<std::uint64_t> seeds;
  std::optional<Bits> pre_fault;
};

/// Parses a YAML scenario. `profiles` are searched for device ids in
/// addition to the built-ins. Throws ParseError with the offending line.
Scenario parse_scenario(const std::string& text, const std::string& origin,
                        std::span<const DeviceProfile> profiles = {});
Scenario load_scenario(const std::filesystem::path& path,
                       std::span<const DeviceProfile> profiles = {});

/// Built-ins followed by `extra` (which may not redefine a built-in name).
std::vector<DeviceProfile> all_profiles(std::span<const DeviceProfile> extra = {});

struct SeedOutcome {
  std::uint64_t seed = 0;
  RunResult result;
  RecoveryVerdict verdict;
};

struct CampaignReport {
  std::vector<SeedOutcome> runs;  ///< sorted by seed order of the scenario
  double success_rate = 0.0;
  Nanos tr_min;
  Nanos tr_median;  ///< lower median
  Nanos tr_max;
  /// counts[logical][temporal]
  std::array<std::array<int, 2>, 2> verdict_counts{};

  bool all_effective() const;
};

/// One run per seed. `jobs` > 1 runs seeds on worker threads; results are
/// identical to the sequential order.
CampaignReport run_campaign(const Scenario& scenario, int jobs = 1);

/// seed,termination,evaluations,T_r_ns,logical,temporal,effective
std::string summary_csv(const CampaignReport& report);

std::string render_report(const Scenario& scenario, const CampaignReport& report);

/// Writes summary.csv, report.txt and per-seed ledger/fitness (and, for
/// step-response benchmarks, best step-response) CSV files.
void write_artifacts(const Scenario& scenario, const CampaignReport& report,
                     const std::filesystem::path& out_dir);

struct BudgetQuery {
  std::string device_name;
  Nanos t_program;
  Nanos t_eval;
  std::int64_t population = 0;
  std::int64_t generations = 0;
  std::optional<Nanos> deadline;
};

struct BudgetReport {
  BudgetQuery query;
  Nanos per_evaluation;
  std::int64_t evaluations = 0;
  Nanos reconfiguration_time;
  std::optional<RecoveryVerdict> verdict;
  std::optional<std::int64_t> max_evaluations;
  std::optional<std::int64_t> max_generations;

  bool feasible() const { return !verdict || verdict->temporally_correct; }
};

BudgetReport budget(const BudgetQuery& query);
std::string render_budget(const BudgetReport& report);

std::string render_devices(std::span<const DeviceProfile> profiles);

}  // namespace ehwrt
