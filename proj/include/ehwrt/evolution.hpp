#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "ehwrt/analog_sim.hpp"
#include "ehwrt/device_model.hpp"
#include "ehwrt/rng.hpp"
#include "ehwrt/rt_ledger.hpp"

namespace ehwrt {

class EvolutionError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

struct Tournament {
  int k = 2;
  bool operator==(const Tournament&) const = default;
};
struct Truncation {
  double fraction = 0.25;
  bool operator==(const Truncation&) const = default;
};
struct RouletteWheel {
  bool operator==(const RouletteWheel&) const = default;
};
using Selection = std::variant<Tournament, Truncation, RouletteWheel>;

std::string to_string(const Selection& s);

enum class Preset {
  /// Truncation to the top quarter, no crossover: strong selection pressure
  /// and mutation-only reproduction.
  PaperRecommended,
  /// Generational GA, population 100 for 500 generations, tournament(2),
  /// one-point crossover at 0.7.
  PlainGA,
};

const char* to_string(Preset p);

struct EAParams {
  int population_size = 100;
  int max_generations = 500;
  Selection selection = Tournament{2};
  double mutation_rate = 0.05;
  double crossover_rate = 0.7;
  int elitism = 1;
  std::uint64_t rng_seed = 1;
  bool stop_on_success = true;
  /// Seed the initial population with the pre-fault configuration.
  bool warm_start = false;
  std::optional<Preset> preset;

  /// Overwrites the fields the preset governs.
  EAParams& apply(Preset p);
  bool mutation_only() const;
  /// Throws EvolutionError.
  void validate() const;
};

enum class Termination { Success, GenerationCap, DeadlineExhausted };

const char* to_string(Termination t);

struct GenerationStats {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
  int evaluated = 0;
  Nanos cumulative;
};

struct RunResult {
  std::optional<Configuration> best;  ///< empty when nothing was evaluated
  double best_fitness = 0.0;
  bool logically_correct = false;
  int generations_executed = 0;
  std::int64_t evaluations = 0;
  TimeLedger ledger;
  Termination termination = Termination::GenerationCap;
  std::vector<GenerationStats> trace;

  /// generation,best,mean,cumulative_T_r_ns
  std::string trace_csv() const;
};

/// Indices of `count` parents drawn from `fitness` (lower is better).
std::vector<std::size_t> select(std::span<const double> fitness,
                                const Selection& method, std::size_t count,
                                Rng& rng);

/// Flips each bit independently with probability `rate`.
void mutate(Bits& bits, double rate, Rng& rng);

/// Builds population_size - elitism children from the parent pool.
std::vector<Bits> reproduce(std::span<const Bits> parents, const EAParams& params,
                            Rng& rng);

struct RunInputs {
  const Benchmark& benchmark;
  const DeviceProfile& device;
  std::span<const FaultSpec> faults;
  std::optional<Nanos> deadline;
  /// Known-good configuration from before the fault, used by warm_start.
  std::optional<Bits> pre_fault;
};

/// Intrinsic evolution on one device: every evaluation is charged
/// t_program + test window before it runs, and no evaluation starts unless
/// it can finish by the deadline.
RunResult run(const EAParams& params, const RunInputs& inputs);

}  // namespace ehwrt
